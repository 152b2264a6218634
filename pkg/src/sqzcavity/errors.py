"""Exception types shared across the package."""


class SqzCavityError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SqzCavityError, ValueError):
    """Invalid or incomplete run configuration (CLI exit code 2)."""


class SingularResponseError(SqzCavityError, ValueError):
    """Cavity response evaluated exactly at the amplification pole (CLI exit code 3)."""


class InstabilityError(SqzCavityError, ValueError):
    """Stochastic integration requested at or above the parametric threshold."""


class IdentifiabilityError(SqzCavityError, RuntimeError):
    """Fit parameters are not separable from the supplied data (CLI exit code 5)."""


class ConvergenceError(SqzCavityError, RuntimeError):
    """Iterative solver exhausted its budget without converging (CLI exit code 6)."""
