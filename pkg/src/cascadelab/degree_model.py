"""Degree laws, degree sequences, threshold laws and seed (activation) laws.

Everything here is immutable after construction. Random draws take an
explicit ``numpy.random.Generator``; there is no module-level RNG.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import special, stats

from .rng import as_generator

TAIL_TOL = 1e-10
MASS_TOL = 1e-12
POWERLAW_DEFAULT_MAX = 10_000


class ConfigurationError(ValueError):
    """A law is missing data needed for the requested operation."""


def binomial_pmf(s: int, r: int, p: float) -> float:
    """P(Bin(s, p) = r), evaluated in log space once ``s > 50``."""
    if r < 0 or r > s:
        raise ValueError(f"binomial_pmf: need 0 <= r <= s, got r={r}, s={s}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binomial_pmf: p={p} outside [0, 1]")
    if p == 0.0:
        return 1.0 if r == 0 else 0.0
    if p == 1.0:
        return 1.0 if r == s else 0.0
    if s <= 50:
        return math.comb(s, r) * p**r * (1.0 - p) ** (s - r)
    log_c = math.lgamma(s + 1) - math.lgamma(r + 1) - math.lgamma(s - r + 1)
    return math.exp(log_c + r * math.log(p) + (s - r) * math.log1p(-p))


def thinned_pmf(s: int, j: int, x: float) -> float:
    """P(D_x = j | D = s): keep each of ``s`` points independently w.p. ``x``."""
    return binomial_pmf(s, j, x)


def _freeze(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DegreeDistribution:
    """Asymptotic degree law ``mass[r] = P(D = r)`` on ``0..support_max``.

    Infinite-support laws are truncated at the smallest ``R`` for which the
    dropped third-moment weight ``sum_{r>R} r^3 p_r`` is below ``1e-10`` and
    then renormalised. Power laws with ``gamma <= 4`` have an infinite third
    moment; they are cut at ``support_max`` (default 10**4) and the dropped
    weight is reported in ``tail3`` (``inf`` when the series diverges).
    """

    mass: np.ndarray
    kind: str = "explicit"
    params: Mapping[str, float] = field(default_factory=dict)
    tail3: float = 0.0

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.size == 0:
            raise ValueError("mass must be a non-empty 1-d sequence")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ValueError("mass entries must be finite and non-negative")
        total = math.fsum(mass)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mass sums to {total}, expected 1")
        mass = mass / total
        # trailing zeros carry no information
        nz = np.flatnonzero(mass)
        mass = mass[: nz[-1] + 1]
        object.__setattr__(self, "mass", _freeze(mass))
        object.__setattr__(self, "params", dict(self.params))
        if self.mean <= 0:
            raise ValueError("mean degree must be positive")

    # constructors -----------------------------------------------------
    @classmethod
    def explicit(cls, mass: Iterable[float] | Mapping[int, float]) -> "DegreeDistribution":
        """From a mass vector indexed by degree, or a ``{degree: mass}`` mapping."""
        if isinstance(mass, Mapping):
            arr = np.zeros(max(int(r) for r in mass) + 1)
            for r, m in mass.items():
                arr[int(r)] += m
            return cls(arr, "explicit")
        return cls(np.asarray(list(mass), dtype=np.float64), "explicit")

    @classmethod
    def regular(cls, r: int) -> "DegreeDistribution":
        if r < 1:
            raise ValueError("regular degree must be >= 1")
        mass = np.zeros(r + 1)
        mass[r] = 1.0
        return cls(mass, "regular", {"r": int(r)})

    @classmethod
    def poisson(cls, lam: float, support_max: int | None = None) -> "DegreeDistribution":
        if lam <= 0:
            raise ValueError("Poisson mean must be positive")
        hi = int(lam + 40.0 * math.sqrt(lam) + 60)
        r = np.arange(hi + 1)
        pmf = stats.poisson.pmf(r, lam)
        tail3 = np.cumsum((r**3 * pmf)[::-1])[::-1]  # tail3[R] = sum_{r>=R}
        if support_max is None:
            ok = np.flatnonzero(tail3 < TAIL_TOL)
            support_max = int(ok[0]) - 1 if ok.size else hi
            support_max = max(support_max, 1)
        dropped = float(tail3[support_max + 1]) if support_max + 1 <= hi else 0.0
        mass = pmf[: support_max + 1]
        return cls(mass / mass.sum(), "poisson", {"lambda": float(lam)}, dropped)

    @classmethod
    def power_law(cls, gamma: float, support_max: int | None = None) -> "DegreeDistribution":
        """p_r proportional to r^-gamma on r >= 1 (no degree-0 atom)."""
        if gamma <= 1:
            raise ValueError("power-law exponent must exceed 1")
        if support_max is None:
            support_max = POWERLAW_DEFAULT_MAX
            if gamma > 4:
                # Hurwitz zeta gives the exact third-moment tail
                norm = special.zeta(gamma, 1)
                for R in (10, 30, 100, 300, 1000, 3000, POWERLAW_DEFAULT_MAX):
                    if special.zeta(gamma - 3, R + 1) / norm < TAIL_TOL:
                        support_max = R
                        break
        r = np.arange(1, support_max + 1, dtype=np.float64)
        w = r**-gamma
        norm = special.zeta(gamma, 1)
        tail3 = special.zeta(gamma - 3, support_max + 1) / norm if gamma > 4 else math.inf
        mass = np.concatenate([[0.0], w / w.sum()])
        return cls(mass, "powerlaw", {"gamma": float(gamma)}, float(tail3))

    # accessors --------------------------------------------------------
    @property
    def support_max(self) -> int:
        return self.mass.size - 1

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.mass.size)

    @property
    def mean(self) -> float:
        return float(np.dot(self.degrees, self.mass))

    def pmf(self, r: int) -> float:
        return float(self.mass[r]) if 0 <= r < self.mass.size else 0.0

    def moments(self) -> tuple[float, float, float]:
        """(E[D], E[D(D-1)], E[D^3]) over the stored support."""
        r = self.degrees.astype(np.float64)
        return (
            float(np.dot(r, self.mass)),
            float(np.dot(r * (r - 1), self.mass)),
            float(np.dot(r**3, self.mass)),
        )

    def thinned_mean(self, x: float) -> float:
        return thinned_mean(self, x)

    # serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        if self.kind == "poisson":
            return {"kind": "poisson", "lambda": self.params["lambda"], "support_max": self.support_max}
        if self.kind == "powerlaw":
            return {"kind": "powerlaw", "gamma": self.params["gamma"], "support_max": self.support_max}
        if self.kind == "regular":
            return {"kind": "regular", "r": self.params["r"]}
        return {"kind": "explicit", "mass": [float(m) for m in self.mass]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "DegreeDistribution":
        kind = str(d.get("kind", "")).lower()
        if kind == "poisson":
            return cls.poisson(float(d["lambda"]), d.get("support_max"))
        if kind in ("powerlaw", "power_law"):
            return cls.power_law(float(d["gamma"]), d.get("support_max"))
        if kind == "regular":
            return cls.regular(int(d["r"]))
        if kind == "explicit":
            return cls.explicit(d["mass"])
        raise ValueError(f"unknown degree distribution kind {d.get('kind')!r}")

    @classmethod
    def from_json(cls, text: str) -> "DegreeDistribution":
        return cls.from_dict(json.loads(text))


def moments(p: DegreeDistribution) -> tuple[float, float, float]:
    return p.moments()


def thinned_mean(p: DegreeDistribution, x: float) -> float:
    """E[D_x] = x * E[D]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("thinning probability must lie in [0, 1]")
    return x * p.mean


@dataclass(frozen=True)
class DegreeSequence:
    degrees: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=np.int64)
        if d.ndim != 1:
            raise ValueError("degree sequence must be 1-d")
        if np.any(d < 0):
            raise ValueError("degrees must be non-negative")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "degrees", d)

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def total(self) -> int:
        return int(self.degrees.sum())

    @property
    def is_even(self) -> bool:
        return self.total % 2 == 0


def sample_degree_sequence(p: DegreeDistribution, n: int, rng=None) -> DegreeSequence:
    """Draw ``n`` i.i.d. degrees from ``p``.

    An odd total is repaired by adding one to the degree of a single vertex
    chosen uniformly at random.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(rng)
    d = rng.choice(p.mass.size, size=n, p=p.mass).astype(np.int64)
    if d.sum() % 2:
        d[rng.integers(n)] += 1
    return DegreeSequence(d)


@dataclass(frozen=True)
class ConditionReport:
    even: bool
    mean: float
    second_moment: float
    third_moment: float
    giant_margin: float  # sum r(r-2) p_r
    supercritical: bool
    tail3: float = 0.0
    third_moment_finite: bool = True
    second_moment_finite: bool = True


def check_conditions(obj: DegreeSequence | DegreeDistribution) -> ConditionReport:
    """Diagnostics for the regularity conditions on degrees (never raises)."""
    if isinstance(obj, DegreeSequence):
        d = obj.degrees.astype(np.float64)
        n = max(obj.n, 1)
        m1, m2, m3 = d.sum() / n, (d**2).sum() / n, (d**3).sum() / n
        margin = float((d * (d - 2)).sum() / n)
        return ConditionReport(obj.is_even, m1, m2, m3, margin, margin > 0)
    r = obj.degrees.astype(np.float64)
    m1 = float(np.dot(r, obj.mass))
    m2 = float(np.dot(r**2, obj.mass))
    m3 = float(np.dot(r**3, obj.mass))
    margin = float(np.dot(r * (r - 2), obj.mass))
    gamma = obj.params.get("gamma")
    return ConditionReport(
        even=True,
        mean=m1,
        second_moment=m2,
        third_moment=m3,
        giant_margin=margin,
        supercritical=margin > 0,
        tail3=obj.tail3,
        third_moment_finite=not (obj.kind == "powerlaw" and gamma <= 4),
        second_moment_finite=not (obj.kind == "powerlaw" and gamma <= 3),
    )


@dataclass(frozen=True)
class ThresholdLaw:
    """Law of the integer threshold K(s) of a vertex of degree ``s``.

    A vertex with threshold ``k`` activates once more than ``k`` of its
    neighbours are active. ``proportional(q)`` uses ``floor(q s)``, which is
    the best response "adopt B iff N_B > q d".
    """

    kind: str
    q: float | None = None
    k: int | None = None
    rows: Mapping[int, tuple[float, ...]] | None = None

    @classmethod
    def proportional(cls, q: float) -> "ThresholdLaw":
        if not 0.0 < q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        return cls("proportional", q=float(q))

    @classmethod
    def constant(cls, k: int) -> "ThresholdLaw":
        if k < 0:
            raise ValueError("constant threshold must be >= 0")
        return cls("constant", k=int(k))

    @classmethod
    def zero(cls) -> "ThresholdLaw":
        return cls("zero")

    @classmethod
    def table(cls, rows: Mapping[int, Iterable[float]]) -> "ThresholdLaw":
        clean = {}
        for s, row in rows.items():
            row = tuple(float(x) for x in row)
            s = int(s)
            if len(row) != s + 1:
                raise ValueError(f"row for degree {s} must have {s + 1} entries")
            if any(x < 0 for x in row) or abs(math.fsum(row) - 1.0) > MASS_TOL:
                raise ValueError(f"row for degree {s} is not a probability vector")
            clean[s] = row
        return cls("table", rows=clean)

    def deterministic_threshold(self, s: int) -> int | None:
        if self.kind == "proportional":
            return proportional_threshold(self.q, s)
        if self.kind == "constant":
            return min(self.k, s)
        if self.kind == "zero":
            return 0
        return None

    def row(self, s: int) -> np.ndarray:
        """Probability vector over l = 0..s."""
        k = self.deterministic_threshold(s)
        if k is not None:
            out = np.zeros(s + 1)
            out[k] = 1.0
            return out
        if s not in self.rows:
            raise ConfigurationError(f"threshold table has no row for degree {s}")
        return np.asarray(self.rows[s], dtype=np.float64)

    def entries(self, s: int) -> list[tuple[int, float]]:
        """Non-zero (l, t_{s l}) pairs."""
        k = self.deterministic_threshold(s)
        if k is not None:
            return [(k, 1.0)]
        return [(l, w) for l, w in enumerate(self.row(s)) if w > 0]

    def t0(self, s: int) -> float:
        k = self.deterministic_threshold(s)
        if k is not None:
            return 1.0 if k == 0 else 0.0
        return float(self.row(s)[0])

    def sample(self, degrees: np.ndarray, rng=None) -> np.ndarray:
        d = np.asarray(degrees, dtype=np.int64)
        if self.kind == "proportional":
            return np.floor(self.q * d + 1e-12).astype(np.int64)
        if self.kind == "constant":
            return np.minimum(self.k, d)
        if self.kind == "zero":
            return np.zeros_like(d)
        rng = as_generator(rng)
        k = np.empty_like(d)
        for s in np.unique(d):
            idx = np.flatnonzero(d == s)
            k[idx] = rng.choice(int(s) + 1, size=idx.size, p=self.row(int(s)))
        return k

    def to_dict(self) -> dict:
        if self.kind == "proportional":
            return {"kind": "proportional", "q": self.q}
        if self.kind == "constant":
            return {"kind": "constant", "k": self.k}
        if self.kind == "zero":
            return {"kind": "zero"}
        return {"kind": "table", "rows": {str(s): list(r) for s, r in self.rows.items()}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ThresholdLaw":
        kind = str(d.get("kind", "")).lower()
        if kind == "proportional":
            return cls.proportional(float(d["q"]))
        if kind == "constant":
            return cls.constant(int(d["k"]))
        if kind == "zero":
            return cls.zero()
        if kind == "table":
            return cls.table({int(s): r for s, r in d["rows"].items()})
        raise ValueError(f"unknown threshold kind {d.get('kind')!r}")


def proportional_threshold(q: float, s: int) -> int:
    # the epsilon absorbs binary rounding of products such as 0.3 * 10
    return int(math.floor(q * s + 1e-12))


@dataclass(frozen=True)
class ActivationLaw:
    """How the initial active set (the seed) is chosen.

    kinds: ``degree_based`` (alpha per degree), ``uniform`` (one alpha),
    ``single_vertex``, ``vertex_set``, ``pivotal_pair`` (two adjacent
    pivotal vertices, picked by the diffusion module).
    """

    kind: str
    alpha: float | Mapping[int, float] | None = None
    vertices: tuple[int, ...] = ()

    def __post_init__(self):
        a = self.alpha
        vals = a.values() if isinstance(a, Mapping) else ([] if a is None else [a])
        if any(not 0.0 <= float(v) <= 1.0 for v in vals):
            raise ValueError("activation probabilities must lie in [0, 1]")

    @classmethod
    def uniform(cls, alpha: float) -> "ActivationLaw":
        return cls("uniform", alpha=float(alpha))

    @classmethod
    def degree_based(cls, alpha: Mapping[int, float]) -> "ActivationLaw":
        return cls("degree_based", alpha={int(k): float(v) for k, v in alpha.items()})

    @classmethod
    def none(cls) -> "ActivationLaw":
        return cls("uniform", alpha=0.0)

    @classmethod
    def single_vertex(cls, v: int) -> "ActivationLaw":
        return cls("single_vertex", vertices=(int(v),))

    @classmethod
    def vertex_set(cls, vs: Iterable[int]) -> "ActivationLaw":
        return cls("vertex_set", vertices=tuple(sorted({int(v) for v in vs})))

    @classmethod
    def pivotal_pair(cls) -> "ActivationLaw":
        return cls("pivotal_pair")

    @property
    def is_degree_based(self) -> bool:
        return self.kind in ("uniform", "degree_based")

    def alpha_vector(self, support_max: int) -> np.ndarray:
        """alpha_s for s = 0..support_max (degree-based laws only)."""
        if self.kind == "uniform":
            return np.full(support_max + 1, float(self.alpha))
        if self.kind == "degree_based":
            out = np.zeros(support_max + 1)
            for s, a in self.alpha.items():
                if s <= support_max:
                    out[s] = a
            return out
        raise ConfigurationError(f"activation kind {self.kind!r} has no per-degree alpha")

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "alpha": self.alpha}
        if self.kind == "degree_based":
            return {"kind": "degree_based", "alpha": {str(k): v for k, v in self.alpha.items()}}
        if self.kind == "pivotal_pair":
            return {"kind": "pivotal_pair"}
        return {"kind": self.kind, "vertices": list(self.vertices)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ActivationLaw":
        kind = str(d.get("kind", "")).lower()
        if kind == "uniform":
            return cls.uniform(float(d["alpha"]))
        if kind == "degree_based":
            return cls.degree_based({int(k): v for k, v in d["alpha"].items()})
        if kind == "single_vertex":
            return cls.single_vertex(int(d["vertex"]) if "vertex" in d else int(d["vertices"][0]))
        if kind == "vertex_set":
            return cls.vertex_set(d["vertices"])
        if kind == "pivotal_pair":
            return cls.pivotal_pair()
        if kind == "none":
            return cls.none()
        raise ValueError(f"unknown activation kind {d.get('kind')!r}")
