"""Exception types shared across the package."""


class H2MigrateError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(H2MigrateError):
    """Scenario configuration is invalid or cannot be parsed."""


class LiquidDepletionError(H2MigrateError):
    """Total hydrogen density exceeds what the medium can hold before the
    liquid reaches residual saturation (run must abort)."""


class NewtonConvergenceError(H2MigrateError):
    """Newton iteration failed to converge within the allowed iterations
    or line-search backtracks."""


class SingularJacobianError(H2MigrateError):
    """Sparse factorization found the Jacobian singular or unusably
    ill-conditioned (distinct from plain Newton non-convergence)."""
