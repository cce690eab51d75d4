"""Actor-critic solver for infinite-horizon mean field games and control.

Subpackages:

* :mod:`mfac.diffnet` — flat-parameter feed-forward networks with the exact
  derivative flavors the losses need, plus Adam.
* :mod:`mfac.actor`, :mod:`mfac.critic`, :mod:`mfac.score` — the three learned
  components (Gaussian policy, state-value function, Stein score of the mean
  field) and their per-step loss gradients.
* :mod:`mfac.env` — model-free environment boundary and the linear-quadratic
  benchmark environments.
* :mod:`mfac.analytic` — closed-form benchmark solutions used as ground truth.
* :mod:`mfac.trainer` — the online three-timescale training loops.
* :mod:`mfac.cli` — configuration files, run orchestration, persistence.
"""

__version__ = "0.1.0"
