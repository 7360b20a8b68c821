"""Exception types shared across the toolkit."""


class AdaptidError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(AdaptidError, ValueError):
    """An argument violates an operation's preconditions."""


class InvalidSampleError(InvalidArgumentError):
    """A signal sample fed to a filter is NaN or infinite."""


class DivergenceError(AdaptidError, RuntimeError):
    """An adaptive run blew up (non-finite state or runaway error power).

    Carries the iteration index at which divergence was detected.
    """

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class SingularMatrixError(AdaptidError, ValueError):
    """A linear solve was requested on a singular or ill-conditioned matrix."""


class DegenerateSpectrumError(AdaptidError, ValueError):
    """Eigenvalue set unusable for convergence prediction (non-positive values)."""


class InvalidPlantError(AdaptidError, ValueError):
    """A reference plant definition is unusable (e.g. unstable poles)."""


class NoPlateauError(AdaptidError, ValueError):
    """A learning curve has no steady-state plateau to calibrate from."""


class ConfigError(AdaptidError, ValueError):
    """An experiment configuration failed validation."""
