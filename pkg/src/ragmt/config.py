"""Pipeline configuration: dataclasses, TOML loading, hashing, factories.

One structured config drives the whole experiment. The effective config
(file values plus command-line overrides) is snapshotted into every artifact
along with its hash, so results from different configurations can never be
mixed silently.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ragmt.analysis import RemoteJudgmentBackend, ScriptedStub
from ragmt.bleu import DEFAULT_EPSILON
from ragmt.generation import CopyStub, FixedStub, RemoteChatBackend
from ragmt.retrieval import MockEncoder, RemoteEncoder, RetrieverConfig

DEFAULT_SIZES = (0, 100, 200, 500, 1000, 2000)
DEFAULT_API_KEY_ENV = "RAGMT_API_KEY"


class ConfigError(ValueError):
    """Invalid or inconsistent pipeline configuration."""


@dataclass(frozen=True)
class EncoderSpec:
    kind: str = "mock"  # mock | remote
    dim: int = 64
    seed: int = 0
    model: str = "text-embedding-ada-002"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = DEFAULT_API_KEY_ENV


@dataclass(frozen=True)
class AnalysisSpec:
    kind: str = "scripted-stub"  # scripted-stub | remote-llm
    model: str = "gpt-4o"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = DEFAULT_API_KEY_ENV
    a1_default: str = "ANSWER: INNER"
    a2_default: str = "ANSWER: NONE"
    max_parse_retries: int = 3


@dataclass(frozen=True)
class GenerationSpec:
    kind: str = "copy-stub"  # copy-stub | fixed-stub | remote-llm
    model: str = "gpt-4o"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = DEFAULT_API_KEY_ENV
    fixed_text: str = "你好"
    temperature: float = 0.0
    max_retries: int = 3


@dataclass(frozen=True)
class PipelineConfig:
    sizes: tuple[int, ...] = DEFAULT_SIZES
    seed: int = 13
    retriever: RetrieverConfig = field(default_factory=RetrieverConfig)
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    generation: GenerationSpec = field(default_factory=GenerationSpec)
    template_version: str = "v1"
    smoothing_eps: float = DEFAULT_EPSILON
    bare_baseline: bool = False
    max_concurrency: int = 4

    def validate(self, kb_size: int | None = None) -> None:
        if list(self.sizes) != sorted(set(self.sizes)):
            raise ConfigError("sizes must be sorted ascending and unique")
        if any(s < 0 for s in self.sizes):
            raise ConfigError("sizes must be non-negative")
        if kb_size is not None and any(s > kb_size for s in self.sizes):
            raise ConfigError(f"sizes exceed the knowledge base ({kb_size} pairs)")
        if self.smoothing_eps <= 0:
            raise ConfigError("smoothing_eps must be positive")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def config_hash(cfg: PipelineConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def condition_snapshot(cfg: PipelineConfig, effective_size: int) -> dict:
    """Serialized per-condition config; conditions in one sweep must differ
    only in this snapshot's effective_kb_size."""
    snap = cfg.to_dict()
    snap["effective_kb_size"] = effective_size
    return snap


def _build(cls, section: dict, where: str):
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(unknown)}")
    return cls(**section)


def load_config(path: str | Path | None, overrides: dict | None = None) -> PipelineConfig:
    """Build the effective PipelineConfig from a TOML file plus overrides.

    Overrides use the top-level field names (e.g. seed, sizes, k, encoder
    keys nested as dicts) and win over file values.
    """
    data: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)

    retr = dict(data.pop("retriever", {}))
    enc = dict(data.pop("encoder", {}))
    ana = dict(data.pop("analysis", {}))
    gen = dict(data.pop("generation", {}))

    for key, value in (overrides or {}).items():
        if key in ("k", "normalize_vectors"):
            retr[key] = value
        elif key.startswith("encoder."):
            enc[key.split(".", 1)[1]] = value
        elif key.startswith("analysis."):
            ana[key.split(".", 1)[1]] = value
        elif key.startswith("generation."):
            gen[key.split(".", 1)[1]] = value
        else:
            data[key] = value

    if "sizes" in data:
        data["sizes"] = tuple(int(s) for s in data["sizes"])

    cfg = PipelineConfig(
        retriever=_build(RetrieverConfig, retr, "retriever"),
        encoder=_build(EncoderSpec, enc, "encoder"),
        analysis=_build(AnalysisSpec, ana, "analysis"),
        generation=_build(GenerationSpec, gen, "generation"),
        **{
            k: v
            for k, v in data.items()
            if k in PipelineConfig.__dataclass_fields__
            and k not in ("retriever", "encoder", "analysis", "generation")
        },
    )
    unknown = set(data) - set(PipelineConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    cfg.validate()
    return cfg


def build_encoder(spec: EncoderSpec):
    if spec.kind == "mock":
        return MockEncoder(dim=spec.dim, seed=spec.seed)
    if spec.kind == "remote":
        return RemoteEncoder(
            model=spec.model, dim=spec.dim, base_url=spec.base_url, api_key_env=spec.api_key_env
        )
    raise ConfigError(f"unknown encoder kind {spec.kind!r}")


def build_analysis_backend(spec: AnalysisSpec):
    if spec.kind == "scripted-stub":
        return ScriptedStub(a1_default=spec.a1_default, a2_default=spec.a2_default)
    if spec.kind == "remote-llm":
        return RemoteJudgmentBackend(
            model=spec.model, base_url=spec.base_url, api_key_env=spec.api_key_env
        )
    raise ConfigError(f"unknown analysis backend kind {spec.kind!r}")


def build_generation_backend(spec: GenerationSpec):
    if spec.kind == "copy-stub":
        return CopyStub()
    if spec.kind == "fixed-stub":
        return FixedStub(text=spec.fixed_text)
    if spec.kind == "remote-llm":
        return RemoteChatBackend(
            model_id=spec.model,
            base_url=spec.base_url,
            api_key_env=spec.api_key_env,
            temperature=spec.temperature,
        )
    raise ConfigError(f"unknown generation backend kind {spec.kind!r}")


def with_override(cfg: PipelineConfig, **kwargs) -> PipelineConfig:
    return replace(cfg, **kwargs)
