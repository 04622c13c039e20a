"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """Input violates a shape, range or configuration precondition."""


class NumericError(FloatingPointError):
    """Non-finite values met where finite ones are required."""


class CorruptCheckpointError(IOError):
    """Checkpoint file has a bad header, is truncated or fails its CRC."""


class UndefinedMetricError(ValueError):
    """Separation metric is undefined (e.g. zero-energy target)."""


class DatasetLayoutError(IOError):
    """A dataset or estimate directory does not follow the expected layout."""


class ConfigError(ValueError):
    """Unknown key or invalid value in a run configuration."""
