"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model or experiment parameters."""


class NumericalError(RuntimeError):
    """An eigensolver or linear solver failed to meet its tolerance."""


class DegeneracyError(RuntimeError):
    """An operation requiring a simple spectrum hit (near-)degenerate levels.

    Continuous disorder makes degeneracies a probability-zero event; clean
    chains (constant field) can trigger this deliberately.
    """
