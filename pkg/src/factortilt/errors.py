"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed or invalid input data (bad file, bad cell, broken invariant)."""


class ConfigError(ValueError):
    """Invalid parameter value or inconsistent configuration."""


class InfeasibleCapsError(ValueError):
    """Weight caps sum to less than one; no capped allocation exists."""


class ProjectionError(RuntimeError):
    """Cap-and-redistribute projection failed to terminate cleanly."""


class StatsError(ValueError):
    """A statistic is undefined on the given input series."""
