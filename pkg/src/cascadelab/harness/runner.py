"""Monte Carlo orchestration: replicas, aggregation and deterministic CSV output.

Replica ``j`` of sweep point ``i`` draws every random number (degrees,
matching, thresholds, percolation, seed) from
``Philox(SeedSequence(entropy=rng_seed, spawn_key=(i, j)))``. Results are
merged in (point, replica) order, so the CSV does not depend on the
number of workers.
"""
from __future__ import annotations

import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .. import analytic
from ..degree_model import ActivationLaw, sample_degree_sequence
from ..diffusion import (
    draw_seed,
    global_cascade_cutoff,
    pivotal_set,
    run_monotone,
    run_synchronous,
    uniform_vertex_seed,
)
from ..graph_gen import bond_percolate, components, configuration_model, edge_uniforms, to_simple
from ..rng import replica_rng
from .config import ExperimentConfig, ModelSpec

SIG_DIGITS = 12


def fmt(x) -> str:
    """CSV cell: integers verbatim, floats with 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, f".{SIG_DIGITS}g")


def write_csv(header: Sequence[str], rows: Iterable[Sequence], out: io.TextIOBase) -> None:
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    write_csv(header, rows, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class ReplicaRecord:
    point: int
    replica: int
    final_fraction: float
    pivotal_fraction: float
    largest_inactive_fraction: float
    seed_fraction: float
    rounds: int
    period: int  # synchronous dynamics only; 1 for monotone runs
    global_cascade: bool
    wall_time: float
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _stats(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return mean, se


@dataclass
class ReplicaSummary:
    """Per-replica values of one sweep point plus normal-theory aggregates."""

    point: int
    value: float | None
    records: list[ReplicaRecord]
    analytic: dict = field(default_factory=dict)

    def _col(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records if not r.failed], dtype=np.float64)

    @property
    def final_fractions(self) -> np.ndarray:
        return self._col("final_fraction")

    @property
    def pivotal_fractions(self) -> np.ndarray:
        return self._col("pivotal_fraction")

    @property
    def largest_inactive_fractions(self) -> np.ndarray:
        return self._col("largest_inactive_fraction")

    @property
    def rounds(self) -> np.ndarray:
        return self._col("rounds")

    @property
    def wall_times(self) -> np.ndarray:
        return self._col("wall_time")

    @property
    def failed(self) -> int:
        return sum(r.failed for r in self.records)

    @property
    def mean(self) -> float:
        return _stats(self.final_fractions)[0]

    @property
    def stderr(self) -> float:
        return _stats(self.final_fractions)[1]

    @property
    def ci(self) -> tuple[float, float]:
        m, se = _stats(self.final_fractions)
        return m - 1.96 * se, m + 1.96 * se

    @property
    def cascade_frequency(self) -> float:
        x = self._col("global_cascade")
        return float(x.mean()) if x.size else math.nan


# analytic companion values ----------------------------------------------------------------


def analytic_point(model: ModelSpec) -> dict:
    """Limit values matching the simulated quantity for this seeding rule."""
    p, t, pi = model.degree, model.threshold, model.pi
    out = {"analytic_fraction": math.nan, "analytic_gamma": math.nan, "condition_holds": None}
    try:
        out["condition_holds"] = analytic.cascade_condition(p, t, pi)
        kind = model.seed.kind
        if kind in ("uniform", "degree_based", "none"):
            law = model.seed.resolve(1)
            res = analytic.final_buyers(analytic.ModelParams(p, t, law, pi))
            out["analytic_fraction"] = res.fraction
        rep = analytic.pivotal_and_cascade_fractions(p, t, pi)
        out["analytic_gamma"] = rep.gamma_fraction
        out["analytic_cascade"] = rep.s_fraction
        if kind in ("pivotal_pair", "pivotal_set"):
            out["analytic_fraction"] = rep.s_fraction
    except (ValueError, ArithmeticError):
        pass
    return out


# single replica --------------------------------------------------------------------


def run_replica(cfg: ExperimentConfig, point: int, model: ModelSpec, replica: int, s_analytic: float = 0.0) -> ReplicaRecord:
    t0 = time.perf_counter()
    rng = replica_rng(cfg.rng_seed, point, replica)
    n = cfg.n
    try:
        d = sample_degree_sequence(model.degree, n, rng)
        G = configuration_model(d, rng)
        if cfg.simple:
            G = to_simple(G, "reject", rng=rng)
        k = model.threshold.sample(G.original_degree, rng)
        uniforms = edge_uniforms(G, rng) if model.pi < 1.0 else None
        Gp = bond_percolate(G, model.pi, uniforms=uniforms) if uniforms is not None else G
        P = pivotal_set(Gp, k)
        seed = model.seed.resolve(n)
        if isinstance(seed, str):
            seed = P.members
        elif isinstance(seed, int):
            seed = uniform_vertex_seed(n, seed, rng)
        if cfg.dynamics == "monotone":
            out = run_monotone(G, seed, k, model.pi, rng, uniforms=uniforms)
            active, rounds, period, seed_size = out.active, out.rounds, 1, out.seed_size
        else:
            if isinstance(seed, ActivationLaw) and (seed.kind == "pivotal_pair" or seed.is_degree_based):
                seed = draw_seed(seed, Gp, rng, k=k)
            res = run_synchronous(Gp, seed, model.threshold.q)
            active, rounds, period = res.state, res.rounds, res.period
            seed_size = res.b_counts[0]
        frac = float(active.mean())
        inactive = components(G, ~active)
        seed_frac = seed_size / n
        cutoff = global_cascade_cutoff(s_analytic, seed_frac, cfg.detector_relative, cfg.detector_seed_factor)
        return ReplicaRecord(
            point, replica, frac, P.fraction, inactive.giant_size / n, seed_frac,
            int(rounds), int(period), bool(frac > cutoff), time.perf_counter() - t0,
        )
    except Exception as e:  # a failed replica is recorded, the run continues
        msg = f"{type(e).__name__}: {e}"
        return ReplicaRecord(point, replica, math.nan, math.nan, math.nan, math.nan, 0, 0, False,
                             time.perf_counter() - t0, msg)


def _task(args):
    return run_replica(*args)


# whole run -----------------------------------------------------------------------


@dataclass
class RunResult:
    config: ExperimentConfig
    summaries: list[ReplicaSummary]
    wall_time: float

    @property
    def failed(self) -> int:
        return sum(s.failed for s in self.summaries)

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    @property
    def parameter(self) -> str | None:
        return self.config.sweep.parameter if self.config.sweep else None

    AGGREGATE_COLUMNS = (
        "n", "replicas", "failed", "mean_fraction", "stderr_fraction", "ci_low", "ci_high",
        "mean_pivotal", "mean_largest_inactive", "mean_rounds", "cascade_frequency",
        "analytic_fraction", "analytic_gamma", "condition_holds",
    )
    REPLICA_COLUMNS = (
        "replica", "final_fraction", "pivotal_fraction", "largest_inactive_fraction",
        "seed_fraction", "rounds", "period", "global_cascade", "failed",
    )

    def aggregate_table(self) -> tuple[list[str], list[list]]:
        lead = ["point"] + ([self.parameter] if self.parameter else [])
        rows = []
        for s in self.summaries:
            lo, hi = s.ci
            row = [s.point] + ([s.value] if self.parameter else [])
            row += [
                self.config.n, len(s.records), s.failed, s.mean, s.stderr, lo, hi,
                _stats(s.pivotal_fractions)[0], _stats(s.largest_inactive_fractions)[0],
                _stats(s.rounds)[0], s.cascade_frequency,
                s.analytic.get("analytic_fraction"), s.analytic.get("analytic_gamma"),
                s.analytic.get("condition_holds"),
            ]
            rows.append(row)
        return lead + list(self.AGGREGATE_COLUMNS), rows

    def replica_table(self) -> tuple[list[str], list[list]]:
        lead = ["point"] + ([self.parameter] if self.parameter else [])
        rows = []
        for s in self.summaries:
            for r in s.records:
                row = [s.point] + ([s.value] if self.parameter else [])
                row += [r.replica, r.final_fraction, r.pivotal_fraction, r.largest_inactive_fraction,
                        r.seed_fraction, r.rounds, r.period, r.global_cascade, r.failed]
                rows.append(row)
        return lead + list(self.REPLICA_COLUMNS), rows

    def csv(self) -> str:
        return csv_text(*self.aggregate_table())

    def replica_csv(self) -> str:
        return csv_text(*self.replica_table())

    def metadata(self) -> dict:
        errors = [
            {"point": r.point, "replica": r.replica, "error": r.error}
            for s in self.summaries for r in s.records if r.failed
        ]
        return {
            "rng_seed": self.config.rng_seed,
            "rng": "Philox(SeedSequence(entropy=rng_seed, spawn_key=(point, replica)))",
            "config": self.config.to_dict(),
            "failed_replicas": errors,
            "wall_time_seconds": self.wall_time,
        }


def run(cfg: ExperimentConfig, threads: int = 1, analytic_values: bool = True) -> RunResult:
    """Run every (sweep point, replica) pair and aggregate by point."""
    t0 = time.perf_counter()
    points = cfg.points()
    companions = [analytic_point(m) if analytic_values else {} for _, m in points]
    tasks = [
        (cfg, i, m, j, float(np.nan_to_num(companions[i].get("analytic_cascade", 0.0))))
        for i, (_, m) in enumerate(points)
        for j in range(cfg.replicas)
    ]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        records = [_task(t) for t in tasks]
    summaries = []
    for i, (value, _) in enumerate(points):
        recs = records[i * cfg.replicas:(i + 1) * cfg.replicas]
        summaries.append(ReplicaSummary(i, value, recs, companions[i]))
    return RunResult(cfg, summaries, time.perf_counter() - t0)


def write_outputs(result: RunResult, out: str | None = None) -> list[Path]:
    """Write the aggregate CSV (stdout when no path), the per-replica CSV if
    requested, and a ``.meta.json`` sidecar with the seed and config."""
    path = out or result.config.output_path
    if path is None:
        sys.stdout.write(result.csv())
        return []
    path = Path(path)
    path.write_text(result.csv())
    written = [path]
    if result.config.per_replica:
        rp = path.with_suffix(".replicas.csv")
        rp.write_text(result.replica_csv())
        written.append(rp)
    meta = path.with_suffix(".meta.json")
    meta.write_text(json.dumps(result.metadata(), indent=2, sort_keys=True) + "\n")
    written.append(meta)
    return written
