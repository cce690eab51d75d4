"""Exception types shared across the package."""


class MfacError(Exception):
    """Base class for package errors."""


class ContractError(MfacError, ValueError):
    """An argument violated an operation's preconditions (shape, range)."""


class ConfigError(MfacError, ValueError):
    """A configuration object violated its invariants."""


class DegenerateModelError(ConfigError):
    """A closed-form solution does not exist (degenerate denominator)."""


class FaultStateError(MfacError, ArithmeticError):
    """A NaN/Inf appeared where the numerics must stay finite.

    Raised instead of propagating non-finite values silently; the training
    loop converts this into a fault-terminated run with a post-mortem
    checkpoint.
    """
