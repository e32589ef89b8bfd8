"""Plain-text ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Every key has a default, so an
empty file is a valid configuration. Unknown keys and malformed values are
rejected with the offending line number.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from chanest.errors import ConfigError

MODELS = ("interp-resnet", "reesnet-a", "reesnet-b")
ESTIMATORS = ("ls", "mmse", "nn")


@dataclass(frozen=True)
class RunConfig:
    channel: str = "EPA"
    pattern: str = "default"
    # training data
    snr_min: float = 0.0
    snr_max: float = 20.0
    snr_step: float = 1.0
    doppler_max: float = 97.0
    n_per_snr: int = 100
    float32_dataset: bool = True
    # model and training
    model: str = "interp-resnet"
    n_filter: int = 8
    epochs: int = 20
    learning_rate: float = 0.001
    drop_period: int = 20
    drop_factor: float = 0.5
    minibatch: int = 128
    l2: float = 0.001
    validation_fraction: float = 0.05
    precision: str = "float64"
    # evaluation
    eval_snr_min: float = -5.0
    eval_snr_max: float = 25.0
    eval_snr_step: float = 5.0
    eval_frames: int = 500
    estimators: str = "ls,mmse,nn"
    correlation_realizations: int = 10_000
    # artifacts
    dataset: str = "dataset.ceds"
    checkpoint: str = "model.cewt"
    loss_log: str = "loss.csv"
    report: str = "report.csv"
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {', '.join(MODELS)}, got {self.model!r}")
        unknown = set(self.estimator_names) - set(ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}; valid: {', '.join(ESTIMATORS)}")
        if self.precision not in ("float32", "float64"):
            raise ConfigError(f"precision must be float32 or float64, got {self.precision!r}")
        for name in ("n_per_snr", "n_filter", "epochs", "minibatch", "eval_frames", "drop_period"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def estimator_names(self) -> list[str]:
        return [e.strip() for e in self.estimators.split(",") if e.strip()]

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> RunConfig:
        return cls().override(text, source)

    def override(self, text: str, source: str = "<override>") -> RunConfig:
        """Copy with the keys in ``text`` replaced; same syntax and checks as a config file."""
        types = {f.name: f.type for f in fields(self)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep or not key:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            if key not in types:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            values[key] = _convert(key, value, types[key], f"{source}:{lineno}")
        try:
            return dataclasses.replace(self, **values)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.parse(text, str(path))

    def dump(self) -> str:
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))


def _convert(key: str, value: str, kind: str, where: str):
    try:
        if kind == "bool":
            if value.lower() in ("true", "yes", "1"):
                return True
            if value.lower() in ("false", "no", "0"):
                return False
            raise ValueError(value)
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {kind}, got {value!r}") from None
    return value


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
