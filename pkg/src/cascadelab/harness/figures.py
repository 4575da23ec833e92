"""Tabulated curves for re-plotting: one function per figure, each returning
``(header, rows)``. Analytic curves only, except ``trials`` which needs the
best-response simulator."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .. import analytic
from ..degree_model import ActivationLaw, DegreeDistribution, ThresholdLaw, sample_degree_sequence
from ..diffusion import global_cascade_cutoff, trials_to_cascade
from ..graph_gen import configuration_model
from ..rng import replica_rng
from .config import ConfigError

Table = tuple[list[str], list[list]]


def cascade_window(q: float = 0.15, lo: float = 0.5, hi: float = 10.0, steps: int = 191, pi: float = 1.0, **_) -> Table:
    """Pivotal fraction and cascade size along a Poisson mean-degree sweep."""
    rows = []
    t = ThresholdLaw.proportional(q)
    for lam in np.linspace(lo, hi, steps):
        rep = analytic.pivotal_and_cascade_fractions(DegreeDistribution.poisson(lam), t, pi)
        rows.append([lam, rep.gamma_fraction, rep.s_fraction, rep.condition_holds])
    return ["lambda", "gamma", "s", "condition_holds"], rows


def qc_curve(family: str = "poisson", lo: float | None = None, hi: float | None = None, steps: int | None = None, **_) -> Table:
    """Contagion threshold along a Poisson (lambda) or power-law (gamma) family."""
    if family == "poisson":
        lo, hi = (1.0 if lo is None else lo), (10.0 if hi is None else hi)
        xs = np.linspace(lo, hi, steps or 901)
        rows = []
        for lam in xs:
            try:
                rows.append([lam, float(analytic.qc(DegreeDistribution.poisson(lam)))])
            except analytic.NoGiantComponent:
                rows.append([lam, math.nan])
        return ["lambda", "qc"], rows
    if family == "powerlaw":
        lo, hi = (2.05 if lo is None else lo), (3.47 if hi is None else hi)
        rows = []
        for g in np.linspace(lo, hi, steps or 143):
            p = DegreeDistribution.power_law(g)
            try:
                rows.append([g, p.mean, float(analytic.qc(p))])
            except analytic.NoGiantComponent:
                rows.append([g, p.mean, math.nan])
        return ["gamma", "lambda", "qc"], rows
    raise ConfigError(f"unknown family {family!r}; expected poisson or powerlaw", "family")


def coexistence(q: float = 0.2, lo: float = 0.5, hi: float = 5.0, steps: int = 91, pi: float = 1.0, **_) -> Table:
    """Giant component, final B fraction and the largest A component (all
    as fractions of n) in the pivotal equilibrium, plus the criterion."""
    rows = []
    t = ThresholdLaw.proportional(q)
    for lam in np.linspace(lo, hi, steps):
        p = DegreeDistribution.poisson(lam)
        giant = analytic.pivotal_and_cascade_fractions(p, ThresholdLaw.zero(), pi).s_fraction
        rep = analytic.pivotal_and_cascade_fractions(p, t, pi)
        co = analytic.coexistence(t, p, pi)
        if rep.condition_holds:
            inactive_giant = co.inactive_giant
        else:
            inactive_giant = analytic.giant_fraction_of_law(p.mass)
        rows.append([lam, giant, rep.s_fraction, inactive_giant, co.criterion, co.coexists and rep.condition_holds])
    return ["lambda", "giant", "s", "inactive_giant", "criterion", "coexists"], rows


def alpha_c(q: float = 0.3, lo: float = 1.0, hi: float = 6.0, steps: int = 51, pi: float = 1.0, **_) -> Table:
    """Critical seed fraction and the final fraction just above it."""
    rows = []
    t = ThresholdLaw.proportional(q)
    for lam in np.linspace(lo, hi, steps):
        p = DegreeDistribution.poisson(lam)
        rep = analytic.alpha_c_report(p, t, pi)
        cascade = analytic.pivotal_and_cascade_fractions(p, t, pi).s_fraction
        rows.append([lam, rep.alpha_c, rep.final_before, rep.final_after, cascade])
    return ["lambda", "alpha_c", "final_below", "final_above", "s_alpha0"], rows


def seed_response(
    q: float = 0.3,
    lambdas: Sequence[float] = (2.0, 3.0, 4.0),
    lo: float = 0.0,
    hi: float = 0.1,
    steps: int = 201,
    pi: float = 1.0,
    **_,
) -> Table:
    """Final fraction 1 - h1(zhat) against a uniform seed fraction alpha."""
    rows = []
    t = ThresholdLaw.proportional(q)
    for lam in lambdas:
        p = DegreeDistribution.poisson(float(lam))
        for a in np.linspace(lo, hi, steps):
            res = analytic.final_buyers(analytic.ModelParams(p, t, ActivationLaw.uniform(a), pi))
            rows.append([float(lam), a, res.fraction, res.verified])
    return ["lambda", "alpha", "fraction", "verified"], rows


def trials(
    q: float = 0.15,
    lo: float = 1.0,
    hi: float = 8.0,
    steps: int = 15,
    n: int = 2000,
    replicas: int = 10,
    seed: int = 0,
    max_trials: int = 2000,
    **_,
) -> Table:
    """Mean number of single-edge best-response trials before a global cascade."""
    rows = []
    t = ThresholdLaw.proportional(q)
    for i, lam in enumerate(np.linspace(lo, hi, steps)):
        p = DegreeDistribution.poisson(lam)
        s = analytic.pivotal_and_cascade_fractions(p, t).s_fraction
        cutoff = global_cascade_cutoff(s, 2.0 / n)
        counts, censored = [], 0
        for j in range(replicas):
            rng = replica_rng(seed, i, j)
            G = configuration_model(sample_degree_sequence(p, n, rng), rng)
            res = trials_to_cascade(G, q, rng, cutoff=cutoff, max_trials=max_trials)
            counts.append(res.trials)
            censored += res.censored
        c = np.array(counts, dtype=np.float64)
        se = float(c.std(ddof=1) / math.sqrt(c.size)) if c.size > 1 else 0.0
        rows.append([lam, float(c.mean()), se, censored / replicas, s])
    return ["lambda", "mean_trials", "stderr_trials", "censored_fraction", "s"], rows


FIGURES: dict[str, Callable[..., Table]] = {
    "cascade_window": cascade_window,
    "qc_curve": qc_curve,
    "coexistence": coexistence,
    "alpha_c": alpha_c,
    "seed_response": seed_response,
    "trials": trials,
}


def figure(name: str, **options) -> Table:
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; expected one of {sorted(FIGURES)}", "figure")
    opts = {k: v for k, v in options.items() if v is not None}
    return FIGURES[name](**opts)
