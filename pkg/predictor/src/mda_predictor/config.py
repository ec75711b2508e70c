"""Run configuration: typed fields, dict round trip, key=value file loader."""
from dataclasses import dataclass, fields

from .errors import InvalidInputError, UsageError

ENCODER_DILATIONS = (1, 2, 4)
DECODER_DILATIONS = (4, 2, 1)


@dataclass(frozen=True)
class PredictorConfig:
    """Model and training settings.

    w history samples feed the encoders, h samples ahead come out of the
    decoders. Dilation schedules are part of the architecture and only the
    canonical values are accepted; they stay in the config so serialized runs
    are self-describing.
    """

    k: int = 3
    w: int = 128
    h: int = 100
    d: int = 32
    heads: int = 2
    encoder_dilations: tuple = ENCODER_DILATIONS
    decoder_dilations: tuple = DECODER_DILATIONS
    epochs: int = 30
    batch_size: int = 16
    lr: float = 5e-4
    weight_decay: float = 1e-4
    clip_norm: float = 1.0
    lambda1: float = 0.1
    lambda2: float = 0.01
    lambda3: float = 0.05
    tau: float = 0.01
    mode_embeddings: bool = True

    def __post_init__(self):
        for name in ("k", "w", "h", "d", "heads", "epochs", "batch_size"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {value!r}")
        for name in ("lr", "clip_norm", "tau"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        # lambda2 = 0 is the documented orthogonality-loss ablation
        for name in ("weight_decay", "lambda1", "lambda2", "lambda3"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")
        if self.d % self.heads != 0:
            raise InvalidInputError(
                f"latent width {self.d} is not divisible by {self.heads} heads")
        object.__setattr__(self, "encoder_dilations", tuple(self.encoder_dilations))
        object.__setattr__(self, "decoder_dilations", tuple(self.decoder_dilations))
        if self.encoder_dilations != ENCODER_DILATIONS:
            raise InvalidInputError(
                f"encoder dilations are fixed at {ENCODER_DILATIONS}")
        if self.decoder_dilations != DECODER_DILATIONS:
            raise InvalidInputError(
                f"decoder dilations are fixed at {DECODER_DILATIONS}")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PredictorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("encoder_dilations", "decoder_dilations"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_dilations(text: str) -> tuple:
    return tuple(int(part) for part in text.split(","))


def parse_config_value(key: str, text: str):
    """Convert one key=value string to the field's declared type."""
    defaults = PredictorConfig()
    if not hasattr(defaults, key):
        raise UsageError(f"unknown config key {key!r}")
    current = getattr(defaults, key)
    try:
        if isinstance(current, bool):
            return _parse_bool(text)
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
        if isinstance(current, tuple):
            return _parse_dilations(text)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {exc}") from exc
    raise UsageError(f"config key {key!r} is not settable from text")


def read_run_config(path) -> dict:
    """key = value lines; # comments and blank lines ignored."""
    overrides = {}
    try:
        with open(path) as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                overrides[key.strip()] = parse_config_value(key.strip(), value.strip())
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    return overrides
