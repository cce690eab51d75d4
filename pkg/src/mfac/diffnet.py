"""Minimal differentiable feed-forward network engine on flat parameter vectors.

Networks are described by a :class:`NetSpec` (input dim, hidden layers with
activations, output dim) and parameterized by a single flat float64 vector laid
out layer by layer as (weights row-major, then biases). The final layer is
always linear. Besides plain evaluation the engine provides exactly the
derivative flavors the training losses need:

* ``grad_params`` / ``grad_params_scalar`` — reverse-mode gradients of the
  output(s) with respect to all parameters,
* ``input_derivative`` — trace of the input Jacobian (``dy/dx`` for d=1),
* ``grad_params_of_score_loss`` — parameter gradient of
  ``tr(dy/dx) + 0.5*||y||^2`` via a joint forward-over-reverse pass, which is
  exact (no nested finite differences) and cheap enough to run every step,
* ``adam_update`` — functional Adam with bias correction.

Everything is pure: operations return new arrays and never mutate inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, FaultStateError

Array = np.ndarray

ACTIVATIONS = ("tanh", "elu", "identity", "softplus")


@dataclass(frozen=True)
class NetSpec:
    """Architecture description; immutable and hashable."""

    input_dim: int
    hidden_layers: tuple[tuple[int, str], ...]
    output_dim: int

    def __post_init__(self) -> None:
        layers = tuple((int(w), str(a)) for w, a in self.hidden_layers)
        object.__setattr__(self, "hidden_layers", layers)
        if self.input_dim < 1 or self.output_dim < 1:
            raise ContractError("input_dim and output_dim must be >= 1")
        for width, act in layers:
            if width < 1:
                raise ContractError(f"hidden width must be >= 1, got {width}")
            if act not in ACTIVATIONS:
                raise ContractError(f"unknown activation {act!r}")
        # cache the layout; these are read on every forward/backward pass
        dims = [self.input_dim] + [w for w, _ in layers] + [self.output_dim]
        acts = [a for _, a in layers] + ["identity"]
        shapes = tuple((dims[i], dims[i + 1], acts[i]) for i in range(len(acts)))
        object.__setattr__(self, "_layer_shapes", shapes)
        object.__setattr__(self, "_param_count", sum((fi + 1) * fo for fi, fo, _ in shapes))

    @property
    def layer_shapes(self) -> tuple[tuple[int, int, str], ...]:
        """(fan_in, fan_out, activation) per layer; output layer is linear."""
        return self._layer_shapes

    @property
    def param_count(self) -> int:
        return self._param_count


def init_params(spec: NetSpec, rng: np.random.Generator) -> Array:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    chunks = []
    for fan_in, fan_out, _ in spec.layer_shapes:
        bound = 1.0 / math.sqrt(fan_in)
        chunks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


def zero_params(spec: NetSpec) -> Array:
    return np.zeros(spec.param_count)


def _check_params(spec: NetSpec, params: Array) -> Array:
    params = np.asarray(params, dtype=float)
    if params.ndim != 1 or params.size != spec.param_count:
        raise ContractError(
            f"expected {spec.param_count} parameters, got shape {params.shape}"
        )
    return params


def unpack(spec: NetSpec, params: Array) -> list[tuple[Array, Array]]:
    """Views of (W, b) per layer; W has shape (fan_out, fan_in)."""
    params = _check_params(spec, params)
    out = []
    pos = 0
    for fan_in, fan_out, _ in spec.layer_shapes:
        w = params[pos : pos + fan_in * fan_out].reshape(fan_out, fan_in)
        pos += fan_in * fan_out
        b = params[pos : pos + fan_out]
        pos += fan_out
        out.append((w, b))
    return out


def _as_input(spec: NetSpec, x) -> Array:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (spec.input_dim,):
        raise ContractError(f"expected input of shape ({spec.input_dim},), got {x.shape}")
    return x


# Activation value / first / second derivative. Derivatives reuse the cached
# activation value a = act(z) where that is cheaper than recomputing.

def _act(name: str, z: Array) -> Array:
    if name == "tanh":
        return np.tanh(z)
    if name == "elu":
        return np.where(z > 0.0, z, np.expm1(z))
    if name == "softplus":
        return np.logaddexp(0.0, z)
    return z


def _act_d(name: str, z: Array, a: Array) -> Array:
    if name == "tanh":
        return 1.0 - a * a
    if name == "elu":
        return np.where(z > 0.0, 1.0, a + 1.0)
    if name == "softplus":
        return sigmoid(z)
    return np.ones_like(z)


def _act_dd(name: str, z: Array, a: Array, d: Array) -> Array:
    if name == "tanh":
        return -2.0 * a * d
    if name == "elu":
        return np.where(z > 0.0, 0.0, a + 1.0)
    if name == "softplus":
        return d * (1.0 - d)
    return np.zeros_like(z)


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _trace_layers(spec: NetSpec, params: Array, x) -> tuple[list[Array], list[Array]]:
    """Forward pass caching (z, a) per layer; a[-1] is the network output."""
    layers = unpack(spec, params)
    a = _as_input(spec, x)
    zs, activations = [], [a]
    for (w, b), (_, _, act) in zip(layers, spec.layer_shapes):
        z = w @ a + b
        a = _act(act, z)
        zs.append(z)
        activations.append(a)
    return zs, activations


def forward(spec: NetSpec, params: Array, x) -> Array:
    """Evaluate the network at a single input; pure and deterministic."""
    _, activations = _trace_layers(spec, params, x)
    out = activations[-1]
    if not np.all(np.isfinite(out)):
        raise FaultStateError(f"non-finite network output {out!r}")
    return out.copy()


def forward_batch(spec: NetSpec, params: Array, xs: Array) -> Array:
    """Evaluate on a batch; xs has shape (n, input_dim), result (n, output_dim)."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != spec.input_dim:
        raise ContractError(f"expected batch of shape (n, {spec.input_dim}), got {xs.shape}")
    a = xs
    for (w, b), (_, _, act) in zip(unpack(spec, params), spec.layer_shapes):
        a = _act(act, a @ w.T + b)
    return a


def grad_params(spec: NetSpec, params: Array, x, upstream: Array) -> Array:
    """Vector-Jacobian product: d(upstream . output)/d(params)."""
    upstream = np.atleast_1d(np.asarray(upstream, dtype=float))
    if upstream.shape != (spec.output_dim,):
        raise ContractError(
            f"expected upstream of shape ({spec.output_dim},), got {upstream.shape}"
        )
    layers = unpack(spec, params)
    zs, activations = _trace_layers(spec, params, x)
    grad = np.zeros_like(np.asarray(params, dtype=float))
    grad_views = unpack(spec, grad)

    delta = upstream
    for l in reversed(range(len(layers))):
        w, _ = layers[l]
        gw, gb = grad_views[l]
        act = spec.layer_shapes[l][2]
        dz = delta * _act_d(act, zs[l], activations[l + 1])
        gw += np.outer(dz, activations[l])
        gb += dz
        delta = w.T @ dz
    if not np.all(np.isfinite(grad)):
        raise FaultStateError("non-finite parameter gradient")
    return grad


def grad_params_scalar(spec: NetSpec, params: Array, x, upstream: float) -> Array:
    """Gradient of ``upstream * output`` for scalar-output networks."""
    if spec.output_dim != 1:
        raise ContractError("grad_params_scalar requires output_dim == 1")
    return grad_params(spec, params, x, np.array([float(upstream)]))


def input_derivative(spec: NetSpec, params: Array, x) -> float:
    """Trace of the input Jacobian; plain dy/dx in the d=1 case."""
    if spec.input_dim != spec.output_dim:
        raise ContractError("input_derivative requires input_dim == output_dim")
    layers = unpack(spec, params)
    zs, activations = _trace_layers(spec, params, x)
    total = 0.0
    for i in range(spec.input_dim):
        adot = np.zeros(spec.input_dim)
        adot[i] = 1.0
        for l, (w, _) in enumerate(layers):
            act = spec.layer_shapes[l][2]
            adot = _act_d(act, zs[l], activations[l + 1]) * (w @ adot)
        total += adot[i]
    return float(total)


def grad_params_of_score_loss(spec: NetSpec, params: Array, x) -> tuple[float, Array]:
    """Loss ``tr(dy/dx) + 0.5*||y||^2`` and its exact parameter gradient.

    The trace term makes this a second-order quantity: the gradient of an
    input derivative with respect to the parameters. Computed by running the
    input-tangent chain forward alongside the primal pass and then reversing
    through both chains jointly (forward-over-reverse), so no finite
    differences are involved.
    """
    if spec.input_dim != spec.output_dim:
        raise ContractError("score loss requires input_dim == output_dim")
    d = spec.input_dim
    layers = unpack(spec, params)
    zs, activations = _trace_layers(spec, params, x)
    acts = [shape[2] for shape in spec.layer_shapes]
    first_d = [_act_d(acts[l], zs[l], activations[l + 1]) for l in range(len(layers))]

    y = activations[-1]
    loss = 0.5 * float(y @ y)

    # Tangent chains, one per input direction; adots[i][l] is the tangent of
    # activation l under direction e_i. The trace accumulates adot_L[i].
    all_adots: list[list[Array]] = []
    for i in range(d):
        adot = np.zeros(d)
        adot[i] = 1.0
        adots = [adot]
        for l, (w, _) in enumerate(layers):
            adot = first_d[l] * (w @ adot)
            adots.append(adot)
        all_adots.append(adots)
        loss += float(adots[-1][i])

    grad = np.zeros_like(np.asarray(params, dtype=float))
    grad_views = unpack(spec, grad)

    # Joint reverse pass: lam is the adjoint of the primal activation, lamdot[i]
    # the adjoint of direction i's tangent. The sigma'' term couples the two.
    lam = y.copy()
    lamdots = [np.zeros(d) for _ in range(d)]
    for i in range(d):
        lamdots[i][i] = 1.0
    for l in reversed(range(len(layers))):
        w, _ = layers[l]
        gw, gb = grad_views[l]
        second_d = _act_dd(acts[l], zs[l], activations[l + 1], first_d[l])
        zdots = [w @ all_adots[i][l] for i in range(d)]

        mu = lam * first_d[l]
        for i in range(d):
            mu = mu + lamdots[i] * second_d * zdots[i]
        mudots = [lamdots[i] * first_d[l] for i in range(d)]

        gw += np.outer(mu, activations[l])
        for i in range(d):
            gw += np.outer(mudots[i], all_adots[i][l])
        gb += mu

        lam = w.T @ mu
        lamdots = [w.T @ mudots[i] for i in range(d)]

    if not math.isfinite(loss):
        raise FaultStateError(f"non-finite score loss {loss!r}")
    if not np.all(np.isfinite(grad)):
        raise FaultStateError("non-finite score-loss gradient")
    return loss, grad


@dataclass(frozen=True)
class AdamState:
    """Adam moment estimates; step_count increments by one per update."""

    m: Array
    v: Array
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8


def adam_init(n_params: int, **kwargs) -> AdamState:
    return AdamState(m=np.zeros(n_params), v=np.zeros(n_params), **kwargs)


def adam_update(
    params: Array, grad: Array, state: AdamState, lr: float
) -> tuple[Array, AdamState]:
    """One bias-corrected Adam step; returns new arrays, mutates nothing."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape or params.shape != state.m.shape:
        raise ContractError("parameter / gradient / moment shape mismatch")
    if lr < 0.0:
        raise ContractError("learning rate must be >= 0")
    t = state.step_count + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    new_state = AdamState(
        m=m, v=v, step_count=t, beta1=state.beta1, beta2=state.beta2, eps_hat=state.eps_hat
    )
    return new_params, new_state
