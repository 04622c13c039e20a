"""Flat ``key = value`` run configuration shared by all CLI subcommands."""
from dataclasses import asdict, dataclass, fields, replace

from .data import SequenceConfig
from .exceptions import ConfigError, InvalidArgumentError
from .masker import MaskerConfig
from .objective import ObjectiveConfig
from .params import ModelDims
from .signal import StftConfig
from .training import TrainConfig

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    # analysis
    frame_length: int = 511
    fft_length: int = 512
    hop: int = 128
    sample_rate: int = 44100
    # sequences and network widths
    T: int = 30
    L: int = 5
    F: int = 93
    denoiser_hidden: int = 0
    encoder_alignment: str = "realigned"
    # objective
    lambda1: float = 1e-2
    lambda2: float = 1e-4
    twin_enabled: bool = True
    twin_weight: float = 0.5
    twin_loss_backprop: str = "stop"
    twin_shares_projection: bool = False
    # optimisation
    learning_rate: float = 1e-4
    batch_size: int = 16
    grad_clip_l2: float = 0.5
    epochs: int = 10
    seed: int = 0
    # reconstruction
    griffin_lim_iterations: int = 10

    @property
    def stft(self):
        return StftConfig(self.frame_length, self.fft_length, self.hop, self.sample_rate)

    @property
    def sequence(self):
        return SequenceConfig(self.T, self.L)

    @property
    def dims(self):
        return ModelDims(N=self.stft.retained_bins, F=self.F,
                         denoiser_hidden=self.denoiser_hidden or None)

    @property
    def masker(self):
        return MaskerConfig(N=self.stft.retained_bins, F=self.F, T=self.T, L=self.L,
                            encoder_alignment=self.encoder_alignment)

    @property
    def objective(self):
        return ObjectiveConfig(self.lambda1, self.lambda2, self.twin_enabled, self.twin_weight,
                               self.twin_loss_backprop, self.twin_shares_projection)

    @property
    def training(self):
        return TrainConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                           grad_clip_l2=self.grad_clip_l2, epochs=self.epochs, seed=self.seed)

    def validate(self):
        """Build every component config once; raises :class:`ConfigError` on bad values."""
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.griffin_lim_iterations < 0:
            raise ConfigError("griffin_lim_iterations must be non-negative")
        try:
            self.stft, self.sequence, self.dims, self.masker, self.objective, self.training
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc)) from exc
        return self


PRESETS = {
    "desk": RunConfig(),
    "full": RunConfig(frame_length=2049, fft_length=4096, hop=384, T=60, L=10, F=744),
}

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _coerce(name, kind, text):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {name}: {text!r}") from exc


def _field_types():
    return {f.name: type(getattr(RunConfig(), f.name)) for f in fields(RunConfig)}


def apply_overrides(cfg, overrides):
    """Return ``cfg`` with string ``overrides`` applied; unknown keys are rejected."""
    types = _field_types()
    values = {}
    for key, text in overrides.items():
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, types[key], str(text))
    return replace(cfg, **values).validate()


def parse_config(text, base=None):
    """Parse ``key = value`` lines; ``#`` starts a comment. ``preset`` selects the base."""
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in overrides:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        overrides[key] = value
    preset = overrides.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]
    return apply_overrides(base or RunConfig(), overrides)


def load_config(path, base=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)


def format_config(cfg):
    lines = [f"# effective run configuration (schema {SCHEMA_VERSION})"]
    for key, value in asdict(cfg).items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


def save_config(path, cfg):
    with open(path, "w") as fh:
        fh.write(format_config(cfg))
