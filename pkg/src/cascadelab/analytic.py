"""Limit formulas for the percolated threshold model.

Notation: ``y = 1 - pi + pi z`` is the probability that a half-edge does not
transmit activity, given that the vertex behind it is inactive with
probability ``z`` (in the branching approximation). With thresholds
``t[s, l] = P(K(s) = l)`` and seed probabilities ``alpha_s``:

    h(z)  = sum_s (1-alpha_s) p_s sum_l t_sl sum_{r >= s-l} r b_sr(y)
    h1(z) = sum_s (1-alpha_s) p_s sum_l t_sl sum_{r >= s-l}   b_sr(y)
    g(z)  = lambda z y - h(z)

The final active fraction is ``1 - h1(z)`` at the largest zero of ``g``.
All sums run over the truncated support of the degree law; nothing here
samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import optimize, stats

from .degree_model import (
    ActivationLaw,
    ConfigurationError,
    DegreeDistribution,
    ThresholdLaw,
    check_conditions,
    proportional_threshold,
)

ROOT_TOL = 1e-12
DEFAULT_GRID = 10_000
PROBE_WIDTH = 1e-4
PROBE_POINTS = 32


class NoGiantComponent(ValueError):
    """The degree law is not supercritical, so the contagion threshold is undefined."""


@dataclass(frozen=True)
class ModelParams:
    p: DegreeDistribution
    t: ThresholdLaw
    alpha: ActivationLaw = field(default_factory=ActivationLaw.none)
    pi: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.pi <= 1.0:
            raise ValueError("pi must lie in [0, 1]")
        if not self.alpha.is_degree_based:
            raise ConfigurationError("analytic formulas need a degree-based activation law")

    @cached_property
    def lam(self) -> float:
        return self.p.mean

    @cached_property
    def alpha_vec(self) -> np.ndarray:
        return self.alpha.alpha_vector(self.p.support_max)

    @cached_property
    def terms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened (s, l, weight) with weight = (1 - alpha_s) p_s t_sl."""
        s_list, l_list, w_list = [], [], []
        for s in np.flatnonzero(self.p.mass):
            s = int(s)
            for l, tw in self.t.entries(s):
                s_list.append(s)
                l_list.append(l)
                w_list.append((1.0 - self.alpha_vec[s]) * self.p.mass[s] * tw)
        return np.array(s_list), np.array(l_list), np.array(w_list)

    @cached_property
    def t0(self) -> np.ndarray:
        return np.array([self.t.t0(s) if self.p.mass[s] > 0 else 0.0 for s in range(self.p.support_max + 1)])

    def with_alpha(self, alpha: float | ActivationLaw) -> "ModelParams":
        if not isinstance(alpha, ActivationLaw):
            alpha = ActivationLaw.uniform(alpha)
        return replace(self, alpha=alpha)

    @property
    def alpha_is_zero(self) -> bool:
        return not np.any(self.alpha_vec * self.p.mass > 0)


def _as_array(z):
    arr = np.asarray(z, dtype=np.float64)
    return arr, arr.ndim == 0


def _tail(k, m, y):
    """P(Bin(m, y) >= k), with the conventions k <= 0 -> 1 and m < k -> 0."""
    return stats.binom.sf(k - 1, m, y)


def eval_h(z, params: ModelParams):
    z, scalar = _as_array(z)
    y = (1.0 - params.pi + params.pi * z)[..., None]
    s, l, w = params.terms
    keep = s >= 1
    s, l, w = s[keep], l[keep], w[keep]
    # sum_{r >= k} r b_sr(y) = s y P(Bin(s-1, y) >= k-1)
    out = (w * s * y * _tail(s - l - 1, s - 1, y)).sum(axis=-1)
    return float(out) if scalar else out


def eval_h1(z, params: ModelParams):
    z, scalar = _as_array(z)
    y = (1.0 - params.pi + params.pi * z)[..., None]
    s, l, w = params.terms
    out = (w * _tail(s - l, s, y)).sum(axis=-1)
    return float(out) if scalar else out


def eval_g(z, params: ModelParams):
    z, scalar = _as_array(z)
    y = 1.0 - params.pi + params.pi * z
    out = params.lam * z * y - eval_h(z, params)
    return float(out) if scalar else out


def eval_dh(z, params: ModelParams):
    """d h / d z."""
    z, scalar = _as_array(z)
    y = (1.0 - params.pi + params.pi * z)[..., None]
    s, l, w = params.terms
    keep = s >= 1
    s, l, w = s[keep], l[keep], w[keep]
    k = s - l
    tail = _tail(k - 1, s - 1, y)
    # d/dy P(Bin(m, y) >= j) = m b_{m-1, j-1}(y) for j >= 1
    dtail = np.where((k - 1 >= 1) & (s >= 2), (s - 1) * stats.binom.pmf(k - 2, np.maximum(s - 2, 0), y), 0.0)
    out = params.pi * (w * s * (tail + y * dtail)).sum(axis=-1)
    return float(out) if scalar else out


def eval_dg(z, params: ModelParams):
    z, scalar = _as_array(z)
    y = 1.0 - params.pi + params.pi * z
    out = params.lam * (y + params.pi * z) - eval_dh(z, params)
    return float(out) if scalar else out


def slope_at_one(p: DegreeDistribution, t: ThresholdLaw, pi: float) -> float:
    """g'(1) with no seeding: lambda - pi * E[D(D-1) 1(K(D)=0)]."""
    r = p.degrees.astype(np.float64)
    t0 = np.array([t.t0(int(s)) if p.mass[s] > 0 else 0.0 for s in range(p.mass.size)])
    return p.mean - pi * float(np.sum(r * (r - 1) * p.mass * t0))


def eval_gbar(z, p: DegreeDistribution, t: ThresholdLaw, pi: float = 1.0):
    z, scalar = _as_array(z)
    r = p.degrees.astype(np.float64)
    t0 = np.array([t.t0(int(s)) if p.mass[s] > 0 else 0.0 for s in range(p.mass.size)])
    y = 1.0 - pi + pi * z
    A = float(np.sum(r * p.mass * (1.0 - t0)))
    pw = np.power.outer(y, np.maximum(r - 1, 0)) * (r >= 1)
    out = y * (p.mean * z - A - (pw * (r * p.mass * t0)).sum(axis=-1))
    return float(out) if scalar else out


def eval_h1bar(z, p: DegreeDistribution, t: ThresholdLaw, pi: float = 1.0):
    z, scalar = _as_array(z)
    r = p.degrees.astype(np.float64)
    t0 = np.array([t.t0(int(s)) if p.mass[s] > 0 else 0.0 for s in range(p.mass.size)])
    y = 1.0 - pi + pi * z
    out = (np.power.outer(y, r) * (p.mass * t0)).sum(axis=-1) + float(np.sum(p.mass * (1.0 - t0)))
    return float(out) if scalar else out


# root finding ---------------------------------------------------------------------


def _bisect(f: Callable[[float], float], lo: float, hi: float, f_lo: float, tol: float = ROOT_TOL) -> tuple[float, float]:
    """Shrink [lo, hi] around a sign change of f; f_lo is f(lo) (non-zero)."""
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid, mid
        if (fm < 0) == (f_lo < 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    return lo, hi


def largest_root(
    f: Callable,
    grid: int = DEFAULT_GRID,
    lo: float = 0.0,
    hi: float = 1.0,
    sign_at_hi: float | None = None,
) -> tuple[float, tuple[float, float]] | None:
    """Largest zero of ``f`` on [lo, hi] by grid scan plus bisection.

    ``sign_at_hi`` replaces f(hi) by the sign of f just left of ``hi``; with it
    the search is over [lo, hi). Returns (root, bracket) or None.
    """
    z = np.linspace(lo, hi, grid + 1)
    v = np.asarray(f(z), dtype=np.float64)
    if sign_at_hi is not None:
        v[-1] = sign_at_hi
    sg = np.sign(v)
    change = (sg[:-1] * sg[1:] < 0) | (sg[:-1] == 0)
    if sign_at_hi is None and sg[-1] == 0:
        return hi, (hi, hi)
    idx = np.flatnonzero(change)
    if idx.size == 0:
        return None
    j = int(idx[-1])
    if sg[j] == 0:
        return float(z[j]), (float(z[j]), float(z[j]))
    scalar = lambda x: float(f(np.float64(x)))
    a, b = _bisect(scalar, float(z[j]), float(z[j + 1]), float(v[j]))
    return 0.5 * (a + b), (a, b)


@dataclass(frozen=True)
class FixedPointReport:
    root: float
    kind: str  # "zhat", "xi" or "xibar"
    residual: float
    bracket: tuple[float, float]
    left_negative: bool
    final_fraction: float

    @property
    def hypothesis_ok(self) -> bool:
        """Theorem-style sufficient condition: root 0, or g < 0 just left of it."""
        return self.root == 0.0 or self.left_negative


def _clip(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


def _left_negative(f, root: float) -> bool:
    if root <= 0.0:
        return False
    a = max(root - PROBE_WIDTH, 0.0)
    zs = np.linspace(a, root, PROBE_POINTS + 2)[1:-1]
    return bool(np.all(np.asarray(f(zs)) < 0))


def solve_zhat(params: ModelParams, grid: int = DEFAULT_GRID) -> FixedPointReport:
    """Largest z in [0, 1] with g(z) = 0."""
    g = lambda z: eval_g(z, params)
    g1 = eval_g(1.0, params)
    if abs(g1) <= 1e-14 or params.alpha_is_zero:
        root, bracket = 1.0, (1.0, 1.0)
    else:
        found = largest_root(g, grid)
        root, bracket = found if found is not None else (0.0, (0.0, 0.0))
    return FixedPointReport(
        root=root,
        kind="zhat",
        residual=abs(eval_g(root, params)),
        bracket=bracket,
        left_negative=_left_negative(g, root),
        final_fraction=_clip(1.0 - eval_h1(root, params)),
    )


def solve_xi(p: DegreeDistribution, t: ThresholdLaw, pi: float = 1.0, grid: int = DEFAULT_GRID) -> FixedPointReport:
    """Largest zero of g (no seeding) in [0, 1); reported as 1 when there is none."""
    params = ModelParams(p, t, ActivationLaw.none(), pi)
    g = lambda z: eval_g(z, params)
    slope = slope_at_one(p, t, pi)
    found = largest_root(g, grid, sign_at_hi=-np.sign(slope) if slope != 0 else -1.0)
    root, bracket = found if found is not None else (1.0, (1.0, 1.0))
    return FixedPointReport(
        root=root,
        kind="xi",
        residual=abs(eval_g(root, params)),
        bracket=bracket,
        left_negative=_left_negative(g, root),
        final_fraction=_clip(1.0 - eval_h1(root, params)),
    )


def solve_xibar(p: DegreeDistribution, t: ThresholdLaw, pi: float = 1.0) -> FixedPointReport:
    """Largest zero in [0, 1) of the pivotal-component function.

    gbar(z) / (1 - pi + pi z) is concave and vanishes at 1, so under the
    cascade condition it has exactly one further zero, found by bisection.
    """
    phi = lambda z: eval_gbar(z, p, t, pi) / (1.0 - pi + pi * z) if (1.0 - pi + pi * z) > 0 else -1.0
    if slope_at_one(p, t, pi) >= 0:
        root, bracket = 1.0, (1.0, 1.0)
    else:
        f0 = phi(0.0)
        if f0 >= 0:
            root, bracket = 0.0, (0.0, 0.0)
        else:
            hi = 0.5
            while phi(hi) <= 0:
                hi = 0.5 * (1.0 + hi)
                if hi >= 1.0 - 1e-15:
                    break
            a, b = _bisect(phi, 0.0, hi, f0)
            root, bracket = 0.5 * (a + b), (a, b)
            if a == 0.0 and eval_gbar(0.0, p, t, pi) == 0.0:
                root = 0.0
    gbar = lambda z: eval_gbar(z, p, t, pi)
    return FixedPointReport(
        root=root,
        kind="xibar",
        residual=abs(gbar(root)),
        bracket=bracket,
        left_negative=_left_negative(gbar, root),
        final_fraction=_clip(1.0 - eval_h1bar(root, p, t, pi)),
    )


def grid_converged(params: ModelParams, grid: int = DEFAULT_GRID, tol: float = 1e-9) -> bool:
    """Self-test: doubling the scan grid must not move the selected root."""
    return abs(solve_zhat(params, grid).root - solve_zhat(params, 2 * grid).root) <= tol


# cascade condition and contagion threshold ---------------------------------------------


def cascade_margin(p: DegreeDistribution, t: ThresholdLaw, pi: float = 1.0) -> float:
    """pi E[D(D-1) 1(K(D)=0)] - E[D]; positive iff the cascade condition holds."""
    return -slope_at_one(p, t, pi)


def cascade_condition(p: DegreeDistribution, t: ThresholdLaw, pi: float = 1.0) -> bool:
    return cascade_margin(p, t, pi) > 0


def _scaled_int(x: float) -> int:
    num, den = x.as_integer_ratio()
    return num << (1074 - den.bit_length() + 1)


def qc(p: DegreeDistribution) -> Fraction:
    """Contagion threshold sup{q : sum_{2<=r<1/q} r(r-1) p_r > sum_r r p_r}.

    The sum only changes when 1/q crosses an integer, so the supremum is
    1/m for the least cut m with sum_{2<=r<=m} r(r-1) p_r > lambda. It is
    never attained: at q = 1/m the cut excludes r = m. Masses are compared
    as exact rationals.
    """
    if not check_conditions(p).supercritical:
        raise NoGiantComponent("sum r(r-2) p_r <= 0: no giant component, q_c undefined")
    # every double is an integer multiple of 2^-1074, so integer numerators
    # over that common denominator compare exactly without gcd work
    mass = [_scaled_int(float(x)) for x in p.mass]
    lam = sum(r * m for r, m in enumerate(mass))
    acc = 0
    for m in range(2, len(mass)):
        acc += m * (m - 1) * mass[m]
        if acc > lam:
            return Fraction(1, m)
    raise NoGiantComponent("cascade sum never exceeds the mean on the stored support")


# cascade window ---------------------------------------------------------------------


def psi_poisson(lam: float, q: float) -> float:
    """e^-lam sum_{2 <= r < 1/q} lam^(r-1) / (r-2)!."""
    top = 1
    while proportional_threshold(q, top + 1) == 0:
        top += 1
    return math.exp(-lam) * sum(lam ** (r - 1) / math.factorial(r - 2) for r in range(2, top + 1))


def lambda_window(
    q: float,
    family: str | Callable[[float], DegreeDistribution] = "poisson",
    pi: float = 1.0,
    lo: float = 1e-3,
    hi: float = 60.0,
    steps: int = 2000,
    tol: float = 1e-12,
) -> tuple[float, float] | None:
    """Mean-degree range (lambda_i, lambda_s) on which the cascade condition holds.

    For Poisson laws the condition reads pi * psi(lambda) > 1 with psi
    unimodal, solved on each side of its maximum. Any other family is given
    as a callable ``param -> DegreeDistribution`` and handled by scanning
    the cascade margin along the parameter.
    """
    if family == "poisson":
        if proportional_threshold(q, 2) > 0:
            return None
        f = lambda x: pi * psi_poisson(x, q) - 1.0
        top = 1
        while proportional_threshold(q, top + 1) == 0:
            top += 1
        res = optimize.minimize_scalar(lambda x: -f(x), bounds=(1e-9, top + 10.0), method="bounded", options={"xatol": 1e-12})
        star = float(res.x)
        if f(star) <= 0:
            return None
        lam_i = optimize.brentq(f, 1e-12, star, xtol=tol, rtol=4 * np.finfo(float).eps)
        upper = 2 * star
        while f(upper) > 0:
            upper *= 2
        lam_s = optimize.brentq(f, star, upper, xtol=tol, rtol=4 * np.finfo(float).eps)
        return lam_i, lam_s
    t = ThresholdLaw.proportional(q)
    margin = lambda x: cascade_margin(family(x), t, pi)
    xs = np.linspace(lo, hi, steps + 1)
    m = np.array([margin(x) for x in xs])
    pos = np.flatnonzero(m > 0)
    if pos.size == 0:
        return None
    i, j = int(pos[0]), int(pos[-1])

    def refine(a, b, fa):
        while b - a > max(tol, 1e-10):
            mid = 0.5 * (a + b)
            fm = margin(mid)
            if (fm > 0) == (fa > 0):
                a, fa = mid, fm
            else:
                b = mid
        return 0.5 * (a + b)

    lam_i = xs[0] if i == 0 else refine(xs[i - 1], xs[i], m[i - 1])
    lam_s = xs[-1] if j == steps else refine(xs[j], xs[j + 1], m[j])
    return float(lam_i), float(lam_s)


@dataclass(frozen=True)
class CascadeReport:
    condition_holds: bool
    qc: Fraction | None
    lambda_i: float | None
    lambda_s: float | None
    s_fraction: float
    gamma_fraction: float
    xi: FixedPointReport | None = None
    xibar: FixedPointReport | None = None


def pivotal_and_cascade_fractions(
    p: DegreeDistribution,
    t: ThresholdLaw | float,
    pi: float = 1.0,
    grid: int = DEFAULT_GRID,
) -> CascadeReport:
    """Pivotal fraction gamma = 1 - h1bar(xibar) and cascade size s = 1 - h1(xi)."""
    if not isinstance(t, ThresholdLaw):
        t = ThresholdLaw.proportional(t)
    holds = cascade_condition(p, t, pi)
    try:
        q_c = qc(p)
    except NoGiantComponent:
        q_c = None
    window = lambda_window(t.q, "poisson", pi) if (t.kind == "proportional" and p.kind == "poisson") else None
    lam_i, lam_s = window if window else (None, None)
    if not holds:
        return CascadeReport(False, q_c, lam_i, lam_s, 0.0, 0.0)
    xi = solve_xi(p, t, pi, grid)
    xibar = solve_xibar(p, t, pi)
    s = xi.final_fraction if xi.hypothesis_ok else 0.0
    return CascadeReport(True, q_c, lam_i, lam_s, s, xibar.final_fraction, xi, xibar)


# critical seed ----------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaCReport:
    alpha_c: float | None
    z_before: float | None = None  # largest root just below alpha_c
    z_after: float | None = None  # largest root just above alpha_c
    final_before: float | None = None
    final_after: float | None = None
    method: str = "double_root"

    @property
    def jump(self) -> float:
        if self.final_before is None or self.final_after is None:
            return 0.0
        return self.final_after - self.final_before


def _seedless(p, t, pi) -> ModelParams:
    return ModelParams(p, t, ActivationLaw.none(), pi)


def alpha_c_report(
    p: DegreeDistribution,
    t: ThresholdLaw | float,
    pi: float = 1.0,
    grid: int = 20_000,
    min_jump: float = 1e-3,
) -> AlphaCReport:
    """Critical uniform seed fraction from the tangential (double) root of g.

    With uniform alpha, g(z; alpha) = h0(z) (alpha - A(z)) where h0 is h
    without seeding and A(z) = 1 - lambda z y / h0(z). Hence the largest
    root is max{z : A(z) >= alpha}, and it jumps exactly when alpha crosses
    a strict local maximum of A that exceeds A everywhere to its right; at
    that point g = dg/dz = 0. The jump with the largest effect on the final
    fraction is reported; alpha_c = 0 when the cascade condition holds.
    """
    if not isinstance(t, ThresholdLaw):
        t = ThresholdLaw.proportional(t)
    base = _seedless(p, t, pi)
    if cascade_condition(p, t, pi):
        xi = solve_xi(p, t, pi)
        after = xi.final_fraction
        if after > min_jump:
            return AlphaCReport(0.0, 1.0, xi.root, 0.0, after)
        return AlphaCReport(None)
    lam = base.lam
    z = np.linspace(0.0, 1.0, grid + 1)[1:-1]
    h0 = eval_h(z, base)
    ok = h0 > 0
    z, h0 = z[ok], h0[ok]
    y = 1.0 - pi + pi * z
    A = 1.0 - lam * z * y / h0

    def D(x):
        # sign of dA/dz
        yy = 1.0 - pi + pi * x
        return x * yy * eval_dh(x, base) - (yy + pi * x) * eval_h(x, base)

    def A_of(x):
        yy = 1.0 - pi + pi * x
        return 1.0 - lam * x * yy / eval_h(x, base)

    d = D(z)
    cand = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0))
    right_max = np.maximum.accumulate(A[::-1])[::-1]  # max over w >= z
    h1_0 = lambda x: eval_h1(x, base)
    best = AlphaCReport(None)
    for j in cand[::-1]:
        a, b = _bisect(D, float(z[j]), float(z[j + 1]), float(d[j]))
        zs = 0.5 * (a + b)
        ac = A_of(zs)
        if not 0.0 < ac < 1.0:
            continue
        later = right_max[j + 2] if j + 2 < A.size else -np.inf
        if ac <= later:
            continue
        left = np.flatnonzero((z < zs) & (A >= ac))
        if left.size:
            i = int(left[-1])
            hi_z = float(z[i + 1]) if i + 1 < z.size and z[i + 1] < zs else zs
            aa, bb = _bisect(lambda x: A_of(x) - ac, float(z[i]), hi_z, float(A[i] - ac) or 1e-300)
            z1 = 0.5 * (aa + bb)
        else:
            z1 = 0.0
        before = 1.0 - (1.0 - ac) * h1_0(zs)
        after = 1.0 - (1.0 - ac) * h1_0(z1) if z1 > 0 else 1.0 - (1.0 - ac) * eval_h1(0.0, base)
        rep = AlphaCReport(ac, zs, z1, before, after)
        if rep.jump > min_jump and rep.jump > best.jump:
            best = rep
    return best


def alpha_c(p: DegreeDistribution, t: ThresholdLaw | float, pi: float = 1.0) -> float | None:
    return alpha_c_report(p, t, pi).alpha_c


def alpha_c_scan(
    p: DegreeDistribution,
    t: ThresholdLaw | float,
    pi: float = 1.0,
    step: float = 1e-3,
    tol: float = 1e-5,
    grid: int = 20_000,
    min_jump: float = 1e-3,
) -> AlphaCReport:
    """Critical seed fraction by scanning alpha -> 1 - h1(zhat(alpha)).

    Independent of :func:`alpha_c_report`: for every alpha on a grid the
    largest root of g is located by sign changes, candidate jumps are
    bisected in alpha down to ``tol / 100`` and kept only if the final
    fraction still jumps by more than ``min_jump``.
    """
    if not isinstance(t, ThresholdLaw):
        t = ThresholdLaw.proportional(t)
    base = _seedless(p, t, pi)
    zg = np.linspace(0.0, 1.0, grid + 1)
    h0 = eval_h(zg, base)
    h1g = eval_h1(zg, base)
    lamzy = base.lam * zg * (1.0 - pi + pi * zg)

    def zhat(a: float) -> float:
        if a == 0.0:
            return 1.0
        g = lamzy - (1.0 - a) * h0
        sg = np.sign(g)
        idx = np.flatnonzero((sg[:-1] * sg[1:] < 0) | (sg[:-1] == 0))
        if idx.size == 0:
            return 0.0
        j = int(idx[-1])
        if sg[j] == 0:
            return float(zg[j])
        f = lambda x: base.lam * x * (1.0 - pi + pi * x) - (1.0 - a) * eval_h(x, base)
        lo, hi = _bisect(f, float(zg[j]), float(zg[j + 1]), float(g[j]))
        return 0.5 * (lo + hi)

    def final(a: float, zh: float) -> float:
        return 1.0 - (1.0 - a) * eval_h1(zh, base)

    alphas = np.arange(0.0, 1.0, step)
    zs = np.array([zhat(a) for a in alphas])
    F = np.array([1.0 - (1.0 - a) * np.interp(zz, zg, h1g) for a, zz in zip(alphas, zs)])
    dF = np.diff(F)
    cells = np.flatnonzero(dF > max(min_jump, 10 * np.median(np.abs(dF))))
    best = AlphaCReport(None, method="scan")
    for c in cells:
        lo, hi = float(alphas[c]), float(alphas[c + 1])
        zlo, zhi = zs[c], zs[c + 1]
        while hi - lo > tol / 100:
            mid = 0.5 * (lo + hi)
            zm = zhat(mid)
            if abs(zm - zlo) <= abs(zm - zhi):
                lo, zlo = mid, zm
            else:
                hi, zhi = mid, zm
        rep = AlphaCReport(0.5 * (lo + hi), zlo, zhi, final(lo, zlo), final(hi, zhi), "scan")
        if rep.jump > min_jump and rep.jump > best.jump:
            best = rep
    return best


# seeding and Theorem-1 limits ------------------------------------------------------


@dataclass(frozen=True)
class BuyersResult:
    fraction: float
    verified: bool
    report: FixedPointReport


def final_buyers(params: ModelParams, grid: int = DEFAULT_GRID) -> BuyersResult:
    """Asymptotic fraction of adopters 1 - h1(zhat) for a seeding strategy.

    ``verified`` is False when the sufficient condition behind the limit
    (zhat = 0, or g < 0 immediately left of zhat) could not be confirmed.
    """
    rep = solve_zhat(params, grid)
    verified = rep.hypothesis_ok or rep.root == 1.0 and params.alpha_is_zero
    return BuyersResult(rep.final_fraction, bool(verified), rep)


def v_sr_limit(params: ModelParams, z: float, s: int, r: int) -> float:
    """Limit of v_sr(I)/n: inactive vertices of degree s with r inactive neighbours."""
    if params.p.pmf(s) == 0 or r > s:
        return 0.0
    pi = params.pi
    tot = 0.0
    for l, tw in params.t.entries(s):
        # i of the s-r active neighbours sit on deleted edges; need r + i >= s - l
        need = s - l - r
        tot += tw * float(_tail(need, s - r, 1.0 - pi))
    return (1.0 - params.alpha_vec[s]) * params.p.pmf(s) * float(stats.binom.pmf(r, s, z)) * tot


def e_I_limit(params: ModelParams, z: float) -> float:
    if params.pi == 1.0:
        return 0.5 * eval_h(z, params)
    y = 1.0 - params.pi + params.pi * z
    return 0.0 if y == 0 else z / (2.0 * y) * eval_h(z, params)


@dataclass(frozen=True)
class Theorem1Limits:
    v_H: float
    v_sr_I: dict[tuple[int, int], float]
    v_s_H: dict[int, float]
    e_I: float
    zhat: FixedPointReport


def theorem1_limits(params: ModelParams, report: FixedPointReport | None = None) -> Theorem1Limits:
    rep = report or solve_zhat(params)
    z = rep.root
    y = 1.0 - params.pi + params.pi * z
    cells, vs = {}, {}
    for s in np.flatnonzero(params.p.mass):
        s = int(s)
        for r in range(s + 1):
            v = v_sr_limit(params, z, s, r)
            if v > 0:
                cells[(s, r)] = v
        inactive_s = sum(tw * float(_tail(s - l, s, y)) for l, tw in params.t.entries(s))
        vs[s] = params.p.pmf(s) * (1.0 - (1.0 - params.alpha_vec[s]) * inactive_s)
    return Theorem1Limits(rep.final_fraction, cells, vs, e_I_limit(params, z), rep)


# coexistence ------------------------------------------------------------------------


def _inactive_degree_law(params: ModelParams, z: float) -> np.ndarray:
    """w[r] = limit fraction of vertices that are inactive with r inactive neighbours."""
    R = params.p.support_max
    w = np.zeros(R + 1)
    for s in np.flatnonzero(params.p.mass):
        for r in range(int(s) + 1):
            w[r] += v_sr_limit(params, z, int(s), r)
    return w


def giant_fraction_of_law(w: np.ndarray) -> float:
    """Giant-component size (as a fraction of n) of a configuration model whose
    vertex counts per degree are ``w * n``."""
    r = np.arange(w.size, dtype=np.float64)
    m1 = float(np.dot(r, w))
    if m1 <= 0 or float(np.dot(r * (r - 2), w)) <= 0:
        return 0.0
    G1 = lambda u: float(np.dot(r[1:] * w[1:], u ** (r[1:] - 1))) / m1
    f = lambda u: G1(u) - u
    # smallest fixed point of G1 below 1
    u = 0.0
    for _ in range(100_000):
        nu = G1(u)
        if abs(nu - u) < 1e-15:
            break
        u = nu
    if f(u) != 0 and u < 1:
        hi = u + 1e-9
        while hi < 1 and f(hi) > 0:
            hi = u + 2 * (hi - u)
        if hi < 1:
            u = optimize.brentq(f, u, hi, xtol=1e-15)
    return float(np.dot(w, 1.0 - u**r))


@dataclass(frozen=True)
class CoexistenceReport:
    coexists: bool
    xi: float
    criterion: float
    inactive_giant: float
    hypotheses_ok: bool


def coexistence(q: float | ThresholdLaw, p: DegreeDistribution, pi: float = 1.0, grid: int = DEFAULT_GRID) -> CoexistenceReport:
    """Does the pivotal equilibrium hold a giant component of inactive players?

    criterion = sum_{s,r} r (r - 2) v_sr(xi): the configuration-model giant
    component test applied to the degree law of the inactive subgraph.
    """
    t = q if isinstance(q, ThresholdLaw) else ThresholdLaw.proportional(q)
    xi = solve_xi(p, t, pi, grid)
    params = _seedless(p, t, pi)
    w = _inactive_degree_law(params, xi.root)
    r = np.arange(w.size, dtype=np.float64)
    crit = float(np.dot(r * (r - 2), w))
    ok = cascade_condition(p, t, pi) and xi.hypothesis_ok
    return CoexistenceReport(crit > 1e-12, xi.root, crit, giant_fraction_of_law(w), ok)


def lambda_c(q: float, pi: float = 1.0, steps: int = 80, tol: float = 1e-8) -> list[float]:
    """Sign changes (+ to -) of the coexistence criterion across the Poisson window."""
    win = lambda_window(q, "poisson", pi)
    if win is None:
        return []
    lo, hi = win
    eps = 1e-6 * (hi - lo)
    xs = np.linspace(lo + eps, hi - eps, steps + 1)
    crit = lambda lam: coexistence(q, DegreeDistribution.poisson(lam), pi).criterion
    c = np.array([crit(x) for x in xs])
    out = []
    for j in np.flatnonzero((c[:-1] > 0) & (c[1:] <= 0)):
        a, b = _bisect(crit, float(xs[j]), float(xs[j + 1]), float(c[j]), tol)
        out.append(0.5 * (a + b))
    return out


# local mean-field cross-check ----------------------------------------------------------


@dataclass(frozen=True)
class LmfReport:
    x: float
    root_activity: float
    residual: float
    iterations: int


def lmf_rde(params: ModelParams, max_iter: int = 200_000) -> LmfReport:
    """Mean of the recursive distributional equation, by monotone iteration.

    The map x -> 1 - h(1-x) / (lambda (1 - pi x)) is non-decreasing, so
    iterating from x = 0 climbs to its smallest fixed point, which is the
    solution paired with the largest root of g.
    """
    lam, pi = params.lam, params.pi
    if params.alpha_is_zero:
        # x = 0 is the fixed point paired with zhat = 1, stable or not
        return LmfReport(0.0, 0.0, abs(lam - eval_h(1.0, params)), 0)

    def phi(x: float) -> float:
        den = lam * (1.0 - pi * x)
        if den <= 1e-300:
            return 1.0
        return min(1.0, 1.0 - eval_h(1.0 - x, params) / den)

    x, it = 0.0, 0
    for it in range(1, max_iter + 1):
        nx = phi(x)
        step = nx - x
        x = nx
        if step < 1e-15:
            break
    f = lambda u: phi(u) - u
    if x < 1.0 and f(x) > 0:
        width = 1e-13
        while x + width < 1.0 and f(x + width) > 0:
            width *= 4
        x = optimize.brentq(f, x, min(1.0, x + width), xtol=1e-15)
    residual = abs(lam * (1 - x) * (1 - x * pi) - eval_h(1.0 - x, params))
    return LmfReport(x, 1.0 - eval_h1(1.0 - x, params), residual, it)
