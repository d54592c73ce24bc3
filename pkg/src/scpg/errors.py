"""Exception types shared across the package."""


class ScpgError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ScpgError, ValueError):
    """Invalid configuration or call arguments."""


class TopologyError(ScpgError, IndexError):
    """Coupling graph references an oscillator that does not exist."""


class DegenerateStateError(ScpgError, ArithmeticError):
    """A coupled oscillator sits (numerically) at the origin."""


class DivergenceError(ScpgError, ArithmeticError):
    """A simulated state became non-finite.

    ``module`` names the component that diverged and ``t`` the simulation
    time in seconds (``None`` when unknown).
    """

    def __init__(self, message, module="", t=None):
        super().__init__(message)
        self.module = module
        self.t = t
