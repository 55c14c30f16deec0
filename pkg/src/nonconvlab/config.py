"""Run configurations: YAML in, canonical JSON and a content hash out.

Numbers are kept exact.  A YAML float such as 0.7 is read as the decimal it
spells (7/10); strings like "1/3" are rationals.  The canonical form stores
every parameter as a string or int, so parse(dump(cfg)) is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import yaml

from .digitkit import DigitStream
from .measures import (
    BernoulliLaw,
    FiniteMarkovChain,
    GaussMarginalLaw,
    MarkovLaw,
    TruncatedCFLaw,
    sample_stream,
)
from .observables import Observable
from .schedules import Schedule

__all__ = ["ConfigError", "EXPERIMENTS", "RunConfig", "build_model", "build_observable",
           "build_schedule", "canonical_json", "load_config", "parse_seeds"]

EXPERIMENTS = (
    "slln-run", "freq-count", "pair-count", "dim-formula", "dim-estimate",
    "mixing-report", "mixingale-decay", "construct-point", "cf-bound",
)


class ConfigError(ValueError):
    """The config text does not parse or lacks required fields."""


def _exact(x):
    """Canonical exact form: ints stay ints, everything else becomes a "p/q" or decimal string."""
    if isinstance(x, bool):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        f = Fraction(repr(x))
        return str(f) if f.denominator != 1 else int(f)
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    if isinstance(x, str):
        try:
            f = Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            return x
        return f.numerator if f.denominator == 1 else str(f)
    if isinstance(x, dict):
        return {str(k): _exact(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_exact(v) for v in x]
    if x is None:
        return None
    raise ConfigError(f"unsupported config value {x!r}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def parse_seeds(text) -> list:
    """``"a..b"`` (inclusive), ``"a,b,c"``, an int, or a list."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        return [int(s) for s in text]
    text = str(text).strip()
    if ".." in text:
        a, b = text.split("..", 1)
        a, b = int(a), int(b)
        if b < a:
            raise ConfigError(f"empty seed range {text!r}")
        return list(range(a, b + 1))
    return [int(s) for s in text.split(",") if s.strip()]


@dataclass
class RunConfig:
    experiment: str
    model: dict = field(default_factory=dict)
    schedule: Optional[dict] = None
    F: Optional[dict] = None
    N: Optional[int] = None
    checkpoints: Optional[list] = None
    seeds: list = field(default_factory=lambda: [0])
    params: dict = field(default_factory=dict)
    out: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(raw) - {"experiment", "model", "schedule", "F", "N", "checkpoints",
                              "seeds", "params", "out"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kind = raw.get("experiment")
        if kind not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {kind!r}")
        sched = raw.get("schedule")
        if isinstance(sched, list):
            sched = {"functions": sched}
        N = raw.get("N")
        if N is not None:
            N = int(Fraction(str(N)))
        return cls(
            experiment=kind,
            model=_exact(raw.get("model") or {}),
            schedule=_exact(sched) if sched is not None else None,
            F=_exact(raw.get("F")) if raw.get("F") is not None else None,
            N=N,
            checkpoints=[int(c) for c in raw["checkpoints"]] if raw.get("checkpoints") else None,
            seeds=parse_seeds(raw.get("seeds", [0])),
            params=_exact(raw.get("params") or {}),
            out=raw.get("out"),
        )

    def content(self) -> dict:
        """Everything that determines the outputs (the output directory excluded)."""
        return {"experiment": self.experiment, "model": self.model, "schedule": self.schedule,
                "F": self.F, "N": self.N, "checkpoints": self.checkpoints,
                "seeds": list(self.seeds), "params": self.params}

    def to_json(self) -> str:
        return canonical_json(self.content())

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.content(), sort_keys=True, default_flow_style=None)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:16]

    def param(self, name, default=None):
        return self.params.get(name, default)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _num(v):
    return Fraction(str(v)) if not isinstance(v, Fraction) else v


def build_model(spec: dict):
    """Law object for a model spec, or a DigitStream for ``kind: rational``."""
    kind = spec.get("kind")
    if kind == "bernoulli":
        return BernoulliLaw([_num(v) for v in spec["weights"]], offset=int(spec.get("offset", 0)))
    if kind == "markov":
        if "R" in spec:
            return MarkovLaw([[_num(v) for v in row] for row in spec["R"]])
        return MarkovLaw.from_transition([[_num(v) for v in row] for row in spec["Q"]])
    if kind == "finite_chain":
        return FiniteMarkovChain([[_num(v) for v in row] for row in spec["P"]], spec.get("obs"))
    if kind == "gauss":
        return GaussMarginalLaw()
    if kind == "truncated_cf":
        rbar = spec.get("rbar", "gauss")
        return TruncatedCFLaw(GaussMarginalLaw() if rbar == "gauss" else [_num(v) for v in rbar])
    if kind == "rational":
        return DigitStream.rational(int(spec["p"]), int(spec["q"]), int(spec["base"]))
    raise ConfigError(f"unknown model kind {kind!r}")


def model_stream(model, seed: int) -> DigitStream:
    if isinstance(model, DigitStream):
        return model
    return sample_stream(model, seed)


def build_schedule(spec: Optional[dict]) -> Schedule:
    if spec is None:
        raise ConfigError("this experiment needs a schedule")
    return Schedule.from_config(spec["functions"], spec.get("eps"))


def build_observable(spec: Optional[dict], alphabet: Optional[int]) -> Observable:
    if spec is None:
        raise ConfigError("this experiment needs an observable F")
    kind = spec.get("kind")
    if kind == "indicator_product":
        return Observable.indicator_product(spec["word"], alphabet)
    if kind == "table":
        return Observable.from_table(spec["values"], alphabet)
    raise ConfigError(f"unknown observable kind {kind!r}")
