"""Masker/Denoiser singing-voice separation with TwinNet regularisation."""
from .config import PRESETS, RunConfig
from .estimator import MaDTwinNet
from .exceptions import (
    ConfigError,
    CorruptCheckpointError,
    DatasetLayoutError,
    InvalidArgumentError,
    NumericError,
    UndefinedMetricError,
)

__all__ = [
    "MaDTwinNet",
    "RunConfig",
    "PRESETS",
    "ConfigError",
    "CorruptCheckpointError",
    "DatasetLayoutError",
    "InvalidArgumentError",
    "NumericError",
    "UndefinedMetricError",
]
