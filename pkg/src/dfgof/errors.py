"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, command-line usage, or input file."""


class NumericalError(RuntimeError):
    """Numerical failure: singular systems, divergence, degenerate inputs."""


class SingularMatrixError(NumericalError):
    """A matrix required to be invertible is singular to working precision."""


class RankDeficiencyError(NumericalError):
    """Input vectors or design columns are not linearly independent."""
