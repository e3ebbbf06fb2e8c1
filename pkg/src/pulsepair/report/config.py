"""JSON pipeline configuration: schema validation and object construction."""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema

from ..filters import FilterConfig
from ..frontend import FrontendConfig, Tone
from ..pairsearch import CoarseWindow
from ..scenario import (
    SCENARIO_PRESETS,
    EnergyBurstEvent,
    Injection,
    NarrowbandRfiEvent,
    Scenario,
    tune_noise_rate,
)
from .errors import ConfigError
from .presets import PRESETS

DEFAULT_PRESETS = tuple(PRESETS)


def load_schema() -> dict:
    text = resources.files(__package__).joinpath("config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class FrontendSetup:
    """IQ-path run: front-end settings plus the synthetic tones to observe."""

    config: FrontendConfig
    tones: tuple[Tone, ...]
    duration_s: float
    mjd_day: int = 0
    t0_s: float = 0.0


@dataclass(frozen=True)
class PipelineConfig:
    scenario: Scenario
    filter: FilterConfig = field(default_factory=FilterConfig)
    coarse: CoarseWindow = field(default_factory=CoarseWindow)
    presets: tuple[str, ...] = DEFAULT_PRESETS
    output_dir: Path = Path("out")
    seed: int = 0
    frontend: FrontendSetup | None = None
    document: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        unknown = [p for p in self.presets if p not in PRESETS]
        if unknown:
            raise ConfigError(f"unknown preset(s) {unknown}; known: {', '.join(PRESETS)}")

    def resolved_document(self) -> dict:
        """The configuration as run: seed, presets and the tuned noise rate filled in."""
        doc = copy.deepcopy(self.document)
        doc["seed"] = self.seed
        doc["presets"] = list(self.presets)
        doc.setdefault("scenario", {})["resolved_noise_detection_rate"] = \
            self.scenario.noise_detection_rate
        return doc

    def document_sha256(self) -> str:
        blob = json.dumps(self.resolved_document(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _error_path(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate_document(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_error_path(err)}: {err.message}")


def _tupled(obj: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in obj.items()}


def _build(cls, obj: dict, where: str):
    try:
        return cls(**_tupled(obj))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def build_scenario(obj: dict, seed: int) -> Scenario:
    obj = dict(obj)
    if "preset" in obj:
        name = obj.pop("preset")
        try:
            return SCENARIO_PRESETS[name](seed=seed, **_tupled(obj))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scenario: {exc}") from None
    injections = tuple(_build(Injection, o, f"scenario.injections.{i}")
                       for i, o in enumerate(obj.pop("injections", [])))
    bursts = tuple(_build(EnergyBurstEvent, o, f"scenario.bursts.{i}")
                   for i, o in enumerate(obj.pop("bursts", [])))
    rfi = tuple(_build(NarrowbandRfiEvent, o, f"scenario.rfi.{i}")
                for i, o in enumerate(obj.pop("rfi", [])))
    rate = obj.pop("noise_detection_rate")
    sc = _build(Scenario, {**obj, "noise_detection_rate": 1.0 if rate == "tuned" else rate,
                           "seed": seed}, "scenario")
    sc = replace(sc, injections=injections, bursts=bursts, rfi=rfi)
    if rate == "tuned":
        sc = replace(sc, noise_detection_rate=tune_noise_rate(sc))
    return sc


def build_frontend(obj: dict) -> FrontendSetup:
    obj = dict(obj)
    tones = tuple(_build(Tone, t, f"frontend.tones.{i}") for i, t in enumerate(obj.pop("tones", [])))
    setup = {k: obj.pop(k) for k in ("duration_s", "mjd_day", "t0_s") if k in obj}
    return FrontendSetup(_build(FrontendConfig, obj, "frontend"), tones, **setup)


def build_config(doc: dict, seed: int | None = None, presets=None,
                 output_dir: str | os.PathLike | None = None) -> PipelineConfig:
    """Validate a configuration document and build the pipeline objects.

    ``seed``, ``presets`` and ``output_dir`` override the document (CLI flags).
    """
    if not isinstance(doc, dict):
        raise ConfigError("<root>: configuration must be a JSON object")
    validate_document(doc)
    seed = int(doc.get("seed", 0) if seed is None else seed)
    if seed < 0:
        raise ConfigError("seed: must be >= 0")
    presets = tuple(presets or doc.get("presets") or DEFAULT_PRESETS)
    out = Path(output_dir if output_dir is not None else doc.get("output_dir", "out"))

    filt = dict(doc.get("filter", {}))
    coarse = {k: filt.pop(k) for k in ("max_abs_dt_s", "max_abs_df_hz") if k in filt}
    filter_cfg = _build(FilterConfig, filt, "filter")
    coarse_cfg = _build(CoarseWindow, coarse, "filter")
    frontend = build_frontend(doc["frontend"]) if "frontend" in doc else None
    return PipelineConfig(scenario=build_scenario(doc["scenario"], seed), filter=filter_cfg,
                          coarse=coarse_cfg, presets=presets, output_dir=out, seed=seed,
                          frontend=frontend, document=copy.deepcopy(doc))


def load_config(path, **overrides) -> PipelineConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return build_config(doc, **overrides)


def default_document(scenario_preset: str = "injection", n_days: int = 143) -> dict:
    return {"scenario": {"preset": scenario_preset, "n_days": n_days}}

