"""Experiment configuration: JSON in, validated dataclass out.

Schema (all keys optional unless marked)::

    {
      "model": {                                  # required
        "degree":    {"kind": "poisson", "lambda": 5.0},
        "threshold": {"kind": "proportional", "q": 0.15},
        "seed":      {"kind": "pivotal_pair"},
        "pi": 1.0
      },
      "dynamics": "monotone",                     # or "synchronous"
      "n": 10000,
      "replicas": 50,
      "rng_seed": 1,
      "simple": false,                            # resample until simple
      "sweep": {"parameter": "lambda", "lo": 1.0, "hi": 8.0, "steps": 20},
      "detector": {"relative": 0.25, "seed_factor": 10.0},
      "output": {"path": "run.csv", "per_replica": false}
    }

Degree kinds: poisson (lambda), powerlaw (gamma), regular (r), explicit
(mass: list or {degree: mass}). Threshold kinds: proportional (q),
constant (k), zero, table (rows). Seed kinds: uniform (alpha),
degree_based (alpha: {degree: prob}), pivotal_pair, pivotal_set,
random_vertices (count, or exponent e for floor(n**e)), vertex_set
(vertices), none.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..degree_model import ActivationLaw, ConfigurationError, DegreeDistribution, ThresholdLaw

SWEEP_PARAMETERS = ("lambda", "q", "alpha", "pi")
SEED_KINDS = ("uniform", "degree_based", "pivotal_pair", "pivotal_set", "random_vertices", "vertex_set", "none")
DYNAMICS = ("monotone", "synchronous")


class ConfigError(ConfigurationError):
    """Invalid experiment configuration; carries the offending field and line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class SeedSpec:
    kind: str
    alpha: float | dict[int, float] | None = None
    count: int | None = None
    exponent: float | None = None
    vertices: tuple[int, ...] = ()

    def resolve(self, n: int) -> ActivationLaw | str | int:
        """ActivationLaw, ``"pivotal_set"`` or a vertex count for random seeds."""
        if self.kind == "uniform":
            return ActivationLaw.uniform(self.alpha)
        if self.kind == "degree_based":
            return ActivationLaw.degree_based(self.alpha)
        if self.kind == "none":
            return ActivationLaw.none()
        if self.kind == "pivotal_pair":
            return ActivationLaw.pivotal_pair()
        if self.kind == "vertex_set":
            return ActivationLaw.vertex_set(self.vertices)
        if self.kind == "pivotal_set":
            return "pivotal_set"
        if self.count is not None:
            return int(self.count)
        # guard against n**(1/3) landing a hair below an integer
        return int(math.floor(n ** self.exponent + 1e-9))

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind}
        if self.alpha is not None:
            d["alpha"] = {str(k): v for k, v in self.alpha.items()} if isinstance(self.alpha, dict) else self.alpha
        if self.count is not None:
            d["count"] = self.count
        if self.exponent is not None:
            d["exponent"] = self.exponent
        if self.vertices:
            d["vertices"] = list(self.vertices)
        return d


@dataclass(frozen=True)
class ModelSpec:
    degree: DegreeDistribution
    threshold: ThresholdLaw
    seed: SeedSpec
    pi: float = 1.0

    def to_dict(self) -> dict:
        return {
            "degree": self.degree.to_dict(),
            "threshold": self.threshold.to_dict(),
            "seed": self.seed.to_dict(),
            "pi": self.pi,
        }


@dataclass(frozen=True)
class Sweep:
    parameter: str
    lo: float
    hi: float
    steps: int

    @property
    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n: int = 10_000
    replicas: int = 50
    rng_seed: int = 0
    dynamics: str = "monotone"
    simple: bool = False
    sweep: Sweep | None = None
    detector_relative: float = 0.25
    detector_seed_factor: float = 10.0
    output_path: str | None = None
    per_replica: bool = False

    def points(self) -> list[tuple[float | None, ModelSpec]]:
        """(sweep value, model) for every sweep point; one point when not sweeping."""
        if self.sweep is None:
            return [(None, self.model)]
        return [(float(x), apply_parameter(self.model, self.sweep.parameter, float(x))) for x in self.sweep.values]

    def to_dict(self) -> dict:
        d = {
            "model": self.model.to_dict(),
            "dynamics": self.dynamics,
            "n": self.n,
            "replicas": self.replicas,
            "rng_seed": self.rng_seed,
            "simple": self.simple,
            "detector": {"relative": self.detector_relative, "seed_factor": self.detector_seed_factor},
            "output": {"path": self.output_path, "per_replica": self.per_replica},
        }
        if self.sweep is not None:
            s = self.sweep
            d["sweep"] = {"parameter": s.parameter, "lo": s.lo, "hi": s.hi, "steps": s.steps}
        return d

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        _check_counts(cfg)
        return cfg


def apply_parameter(model: ModelSpec, name: str, value: float) -> ModelSpec:
    """Copy of ``model`` with one sweep parameter set."""
    if name == "lambda":
        if model.degree.kind != "poisson":
            raise ConfigError("sweeping lambda needs a poisson degree law", "sweep.parameter")
        return replace(model, degree=DegreeDistribution.poisson(value))
    if name == "q":
        if model.threshold.kind != "proportional":
            raise ConfigError("sweeping q needs a proportional threshold law", "sweep.parameter")
        return replace(model, threshold=ThresholdLaw.proportional(value))
    if name == "alpha":
        if model.seed.kind not in ("uniform", "none"):
            raise ConfigError("sweeping alpha needs a uniform seed", "sweep.parameter")
        return replace(model, seed=SeedSpec("uniform", alpha=value))
    if name == "pi":
        return replace(model, pi=value)
    raise ConfigError(f"unknown sweep parameter {name!r}; expected one of {SWEEP_PARAMETERS}", "sweep.parameter")


# parsing ----------------------------------------------------------------------------


class _Locator:
    """Maps field names to the first line where their key appears in the source."""

    def __init__(self, text: str | None):
        self.text = text

    def line(self, dotted: str) -> int | None:
        if not self.text:
            return None
        key = dotted.split(".")[-1].split("[")[0]
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else None

    def error(self, message: str, dotted: str) -> ConfigError:
        return ConfigError(message, dotted, self.line(dotted))


def _get(d: Mapping, key: str, path: str, loc: _Locator, kind, default=..., check=None):
    full = f"{path}.{key}" if path else key
    if key not in d:
        if default is ...:
            raise loc.error("missing required field", full)
        return default
    v = d[key]
    try:
        if kind is int:
            if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
                raise TypeError
            v = int(v)
        elif kind is float:
            if isinstance(v, bool):
                raise TypeError
            v = float(v)
            if not math.isfinite(v):
                raise loc.error("must be finite", full)
        elif kind is bool:
            if not isinstance(v, bool):
                raise TypeError
        elif kind is dict:
            if not isinstance(v, dict):
                raise TypeError
        elif kind is str:
            if not isinstance(v, str):
                raise TypeError
    except (TypeError, ValueError):
        raise loc.error(f"expected {kind.__name__}, got {type(v).__name__}", full) from None
    if check is not None:
        msg = check(v)
        if msg:
            raise loc.error(msg, full)
    return v


def _build(what: str, fn, d, loc: _Locator):
    try:
        return fn(d)
    except KeyError as e:
        raise loc.error(f"missing required field {e.args[0]!r}", f"model.{what}") from None
    except (TypeError, ValueError) as e:
        raise loc.error(str(e), f"model.{what}") from None


def _parse_seed(d: Mapping, loc: _Locator) -> SeedSpec:
    path = "model.seed"
    kind = _get(d, "kind", path, loc, str, check=lambda k: None if k in SEED_KINDS else f"unknown seed kind {k!r}")
    prob = lambda v: None if 0.0 <= v <= 1.0 else "must lie in [0, 1]"
    if kind == "uniform":
        return SeedSpec(kind, alpha=_get(d, "alpha", path, loc, float, check=prob))
    if kind == "degree_based":
        raw = _get(d, "alpha", path, loc, dict)
        try:
            alpha = {int(k): float(v) for k, v in raw.items()}
        except (TypeError, ValueError):
            raise loc.error("expected {degree: probability}", f"{path}.alpha") from None
        if any(prob(v) for v in alpha.values()):
            raise loc.error("probabilities must lie in [0, 1]", f"{path}.alpha")
        return SeedSpec(kind, alpha=alpha)
    if kind == "random_vertices":
        count = _get(d, "count", path, loc, int, None, lambda v: None if v >= 0 else "must be >= 0")
        expo = _get(d, "exponent", path, loc, float, None, lambda v: None if 0 <= v <= 1 else "must lie in [0, 1]")
        if (count is None) == (expo is None):
            raise loc.error("give exactly one of 'count' or 'exponent'", path)
        return SeedSpec(kind, count=count, exponent=expo)
    if kind == "vertex_set":
        vs = d.get("vertices")
        if not isinstance(vs, list) or not all(isinstance(v, int) and v >= 0 for v in vs):
            raise loc.error("expected a list of non-negative vertex ids", f"{path}.vertices")
        return SeedSpec(kind, vertices=tuple(vs))
    return SeedSpec(kind)


def config_from_dict(d: Mapping, text: str | None = None) -> ExperimentConfig:
    loc = _Locator(text)
    if not isinstance(d, dict):
        raise ConfigError("top level must be a JSON object", None, 1)
    known = {"model", "dynamics", "n", "replicas", "rng_seed", "simple", "sweep", "detector", "output"}
    for key in d:
        if key not in known:
            raise loc.error("unknown field", key)
    m = _get(d, "model", "", loc, dict)
    degree = _build("degree", DegreeDistribution.from_dict, _get(m, "degree", "model", loc, dict), loc)
    threshold = _build("threshold", ThresholdLaw.from_dict, _get(m, "threshold", "model", loc, dict), loc)
    seed = _parse_seed(_get(m, "seed", "model", loc, dict, {"kind": "pivotal_pair"}), loc)
    pi = _get(m, "pi", "model", loc, float, 1.0, lambda v: None if 0 <= v <= 1 else "must lie in [0, 1]")
    model = ModelSpec(degree, threshold, seed, pi)

    sweep = None
    if "sweep" in d:
        s = _get(d, "sweep", "", loc, dict)
        name = _get(s, "parameter", "sweep", loc, str,
                    check=lambda v: None if v in SWEEP_PARAMETERS else f"expected one of {SWEEP_PARAMETERS}")
        lo = _get(s, "lo", "sweep", loc, float)
        hi = _get(s, "hi", "sweep", loc, float)
        steps = _get(s, "steps", "sweep", loc, int, check=lambda v: None if v >= 1 else "must be >= 1")
        if hi < lo:
            raise loc.error("hi must be >= lo", "sweep.hi")
        sweep = Sweep(name, lo, hi, steps)
        try:
            apply_parameter(model, name, lo)
        except ConfigError as e:
            raise loc.error(str(e).split(": ", 1)[-1], "sweep.parameter") from None
        except ValueError as e:
            raise loc.error(str(e), "sweep.lo") from None

    det = _get(d, "detector", "", loc, dict, {})
    out = _get(d, "output", "", loc, dict, {})
    cfg = ExperimentConfig(
        model=model,
        n=_get(d, "n", "", loc, int, 10_000),
        replicas=_get(d, "replicas", "", loc, int, 50),
        rng_seed=_get(d, "rng_seed", "", loc, int, 0,
                      lambda v: None if 0 <= v < 2**64 else "must be an unsigned 64-bit integer"),
        dynamics=_get(d, "dynamics", "", loc, str, "monotone",
                      lambda v: None if v in DYNAMICS else f"expected one of {DYNAMICS}"),
        simple=_get(d, "simple", "", loc, bool, False),
        sweep=sweep,
        detector_relative=_get(det, "relative", "detector", loc, float, 0.25),
        detector_seed_factor=_get(det, "seed_factor", "detector", loc, float, 10.0),
        output_path=_get(out, "path", "output", loc, str, None),
        per_replica=_get(out, "per_replica", "output", loc, bool, False),
    )
    if cfg.dynamics == "synchronous" and threshold.kind != "proportional":
        raise loc.error("synchronous dynamics needs a proportional threshold law", "dynamics")
    _check_counts(cfg, loc)
    return cfg


def _check_counts(cfg: ExperimentConfig, loc: _Locator | None = None) -> None:
    loc = loc or _Locator(None)
    if cfg.replicas < 1:
        raise loc.error("must be >= 1", "replicas")
    if cfg.n < 1:
        raise loc.error("must be >= 1", "n")
    if not 0 <= cfg.rng_seed < 2**64:
        raise loc.error("must be an unsigned 64-bit integer", "rng_seed")


def parse_config(text: str) -> ExperimentConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", None, e.lineno) from None
    return config_from_dict(d, text)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}") from None
    return parse_config(text)
