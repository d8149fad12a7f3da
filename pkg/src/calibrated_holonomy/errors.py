"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid run configuration or grid/potential specification."""


class DomainError(ValueError):
    """Evaluation outside the valid coordinate domain or operator degree range."""


class ShapeError(ValueError):
    """Fields sampled on mismatched grids or with wrong component layout."""
