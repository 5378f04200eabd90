"""Exception types shared across the package.

ConfigurationError maps to CLI exit code 2, NumericalError (and subclasses)
to exit code 3. Plain argument misuse raises ValueError.
"""


class ConfigurationError(ValueError):
    """Invalid process/experiment configuration (bad stochastic matrix, ...)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed in a detectable way."""


class DegenerateKernelError(NumericalError):
    """Discretized Fokker-Planck operator has a numerically multidimensional kernel."""

    def __init__(self, message, conditioning=None):
        super().__init__(message)
        self.conditioning = conditioning


class SingularFrameError(ValueError):
    """Rotation frame requested at k in {0, pi} (Krein collision)."""


class WrongConstructionError(ValueError):
    """Elliptic density construction called with degenerate diffusion."""


class DivergenceError(ValueError):
    """Correlation form undefined (declared power-law exponent <= 1)."""
