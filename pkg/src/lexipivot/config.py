"""Run configuration: one JSON file with per-stage sections.

Unknown keys anywhere are rejected by name; every field has a default, so
an empty file is a valid (full-scale) configuration. The fully resolved
config is echoed into the output directory of every command.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus.synthetic import CorpusConfig
from .caption.training import TrainingConfig
from .errors import ConfigError

INDUCTION_METHODS = ("linguistic", "visual", "fused", "cnn_mean", "cnn_avgmax")


@dataclass
class ModelSection:
    embed_dim: int = 64
    attn_dim: int = 32
    attention: bool = True
    # float32 training is ~3x faster; gradient checks always run float64
    dtype: str = "float32"
    freeze_encoder: bool = False

    def validate(self):
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"model.dtype must be float32 or float64, got {self.dtype!r}")
        if self.embed_dim < 1 or self.attn_dim < 1:
            raise ConfigError("model dimensions must be positive")


@dataclass
class ExtractionSection:
    method: str = "probe"
    cap: int | None = None

    def validate(self):
        if self.method not in ("probe", "attention"):
            raise ConfigError(f"extraction.method must be probe or attention, "
                              f"got {self.method!r}")
        if self.cap is not None and self.cap < 1:
            raise ConfigError("extraction.cap must be >= 1 when set")


@dataclass
class InductionSection:
    methods: tuple[str, ...] = INDUCTION_METHODS
    fusion_lambda: float = 0.5
    top_k: int = 20
    full_rankings: bool = False
    baseline_set_cap: int = 100
    ks: tuple[int, ...] = (1, 5, 10, 20)
    source_language: str | None = None
    target_language: str | None = None

    def validate(self):
        for m in self.methods:
            if m not in INDUCTION_METHODS:
                raise ConfigError(f"unknown induction method {m!r}; "
                                  f"choose from {list(INDUCTION_METHODS)}")
        if not 0.0 <= self.fusion_lambda <= 1.0:
            raise ConfigError("induction.fusion_lambda must be in [0, 1]")
        if not self.ks or any(k < 1 for k in self.ks):
            raise ConfigError("induction.ks must be positive ranks")


@dataclass
class RunConfig:
    seed: int = 17
    out_dir: str = "runs/out"
    threads: int = 1
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    model: ModelSection = field(default_factory=ModelSection)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    extraction: ExtractionSection = field(default_factory=ExtractionSection)
    induction: InductionSection = field(default_factory=InductionSection)

    def validate(self):
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        self.corpus.validate()
        self.model.validate()
        self.extraction.validate()
        self.induction.validate()
        if self.training.batch_size < 1 or self.training.max_epochs < 1:
            raise ConfigError("training.batch_size and training.max_epochs must be >= 1")

    def to_dict(self) -> dict:
        return _as_jsonable(dataclasses.asdict(self))

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def echo(self, out_dir: Path) -> Path:
        path = Path(out_dir) / "resolved_config.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


_SECTIONS = {
    "corpus": CorpusConfig,
    "model": ModelSection,
    "training": TrainingConfig,
    "extraction": ExtractionSection,
    "induction": InductionSection,
}


def _as_jsonable(value):
    if isinstance(value, dict):
        return {k: _as_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_as_jsonable(v) for v in value]
    return value


def _build_section(cls, data: dict, prefix: str):
    allowed = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in allowed:
            raise ConfigError(f"unknown config key: {prefix}{key}")
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    top_fields = {f.name for f in dataclasses.fields(RunConfig)}
    kwargs = {}
    for key, value in data.items():
        if key not in top_fields:
            raise ConfigError(f"unknown config key: {key}")
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            kwargs[key] = _build_section(_SECTIONS[key], value, f"{key}.")
        else:
            kwargs[key] = value
    config = RunConfig(**kwargs)
    if isinstance(config.corpus.languages, list):
        config.corpus.languages = tuple(config.corpus.languages)
    config.validate()
    return config


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(data)
