"""Percolated threshold diffusion on multigraphs.

Two dynamics are provided. ``run_monotone`` is the permanent-adoption model:
seeds stay active and a vertex joins once more than its threshold of
neighbours (along kept edges) are active. ``run_synchronous`` is the
best-response game in which every vertex, seeds included, revises at once.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ._kernels import propagate
from .degree_model import ActivationLaw, ThresholdLaw
from .graph_gen import Multigraph, bond_percolate, components, edge_uniforms
from .rng import as_generator


@dataclass(frozen=True, eq=False)
class ThresholdAssignment:
    k: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=np.int64)
        if np.any(k < 0):
            raise ValueError("thresholds must be non-negative")
        object.__setattr__(self, "k", k)


def assign_thresholds(G: Multigraph, law: ThresholdLaw, rng=None) -> ThresholdAssignment:
    """Draw k_i from the law at s = original degree of i."""
    return ThresholdAssignment(law.sample(G.original_degree, rng))


def _k_array(k) -> np.ndarray:
    return k.k if isinstance(k, ThresholdAssignment) else np.asarray(k, dtype=np.int64)


@dataclass(eq=False)
class DiffusionOutcome:
    """Final census of a monotone run.

    ``v_sr_I[(s, r)]`` counts inactive vertices of original degree ``s`` with
    ``r`` inactive neighbours in the unpercolated graph; ``e_I`` is the edge
    count of the inactive-induced subgraph.
    """

    n: int
    active: np.ndarray
    v_H: int
    v_s_H: dict[int, int]
    v_sr_I: dict[tuple[int, int], int]
    e_I: int
    rounds: int
    seed_size: int

    @property
    def fraction(self) -> float:
        return self.v_H / self.n if self.n else 0.0

    def to_dict(self, bitmap: bool = False) -> dict:
        out = {
            "n": self.n,
            "v_H": self.v_H,
            "seed_size": self.seed_size,
            "rounds": self.rounds,
            "e_I": self.e_I,
            "v_s_H": {str(s): c for s, c in sorted(self.v_s_H.items())},
            "v_sr_I": {f"{s},{r}": c for (s, r), c in sorted(self.v_sr_I.items())},
        }
        if bitmap:
            out["active"] = np.packbits(self.active).tobytes().hex()
        return out


def _census(G: Multigraph, active: np.ndarray, rounds: int, seed_size: int) -> DiffusionOutcome:
    deg = G.original_degree
    inactive = ~active
    owner, nbr = G.half_edge_owner, G.neighbor
    both = inactive[owner] & inactive[nbr]
    r = np.bincount(owner[both], minlength=G.n)
    s_in, r_in = deg[inactive], r[inactive]
    width = int(deg.max(initial=0)) + 1
    keys, counts = np.unique(s_in * width + r_in, return_counts=True)
    v_sr = {(int(key // width), int(key % width)): int(c) for key, c in zip(keys, counts)}
    sH, cH = np.unique(deg[active], return_counts=True)
    return DiffusionOutcome(
        n=G.n,
        active=active,
        v_H=int(active.sum()),
        v_s_H={int(s): int(c) for s, c in zip(sH, cH)},
        v_sr_I=v_sr,
        e_I=int(both.sum()) // 2,
        rounds=int(rounds),
        seed_size=int(seed_size),
    )


@dataclass(frozen=True, eq=False)
class PivotalSet:
    members: np.ndarray
    n: int

    @property
    def fraction(self) -> float:
        return self.members.size / self.n if self.n else 0.0

    def __len__(self) -> int:
        return int(self.members.size)


def _pivotal_on(Gp: Multigraph, k: np.ndarray) -> PivotalSet:
    lab = components(Gp, k == 0)
    if lab.giant < 0:
        return PivotalSet(np.zeros(0, dtype=np.int64), Gp.n)
    return PivotalSet(lab.members(lab.giant), Gp.n)


def pivotal_set(G: Multigraph, k, pi: float = 1.0, rng=None, uniforms=None) -> PivotalSet:
    """Largest component after bond percolation and removal of all k_i >= 1."""
    k = _k_array(k)
    if pi < 1.0 and uniforms is None:
        uniforms = edge_uniforms(G, rng)
    Gp = bond_percolate(G, pi, uniforms=uniforms) if pi < 1.0 or uniforms is not None else G
    return _pivotal_on(Gp, k)


def _pick_pivotal_pair(Gp: Multigraph, k: np.ndarray, rng) -> np.ndarray:
    P = _pivotal_on(Gp, k)
    if len(P) == 0:
        return P.members
    u = int(P.members[rng.integers(len(P))])
    nbrs = Gp.neighbor[Gp.vertex_offsets[u]:Gp.vertex_offsets[u + 1]]
    nbrs = nbrs[(nbrs != u) & (k[nbrs] == 0)]
    if nbrs.size == 0:
        return np.array([u], dtype=np.int64)
    return np.array([u, int(nbrs[rng.integers(nbrs.size)])], dtype=np.int64)


def draw_seed(seed, G: Multigraph, rng, k=None, percolated: Multigraph | None = None) -> np.ndarray:
    """Boolean seed mask for an ActivationLaw, a vertex collection or a mask."""
    if isinstance(seed, ActivationLaw):
        if seed.kind == "uniform":
            return rng.random(G.n) < seed.alpha
        if seed.kind == "degree_based":
            alpha = seed.alpha_vector(int(G.original_degree.max(initial=0)))
            return rng.random(G.n) < alpha[G.original_degree]
        if seed.kind == "pivotal_pair":
            if k is None:
                raise ValueError("pivotal-pair seeding needs thresholds")
            idx = _pick_pivotal_pair(percolated if percolated is not None else G, _k_array(k), rng)
        else:
            idx = np.asarray(seed.vertices, dtype=np.int64)
    else:
        arr = np.asarray(seed)
        if arr.dtype == bool:
            if arr.shape != (G.n,):
                raise ValueError("seed mask has the wrong length")
            return arr.copy()
        idx = arr.astype(np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= G.n):
        raise ValueError("seed vertex out of range")
    mask = np.zeros(G.n, dtype=bool)
    mask[idx] = True
    return mask


def run_monotone(
    G: Multigraph,
    seed,
    k,
    pi: float = 1.0,
    rng=None,
    *,
    uniforms: np.ndarray | None = None,
    order: np.ndarray | None = None,
) -> DiffusionOutcome:
    """Percolated threshold diffusion from ``seed`` to its fixed point.

    The percolation draw (one uniform per edge, edge kept iff U <= pi) is
    materialised before the seed is drawn; pass ``uniforms`` to reuse a draw
    across runs. ``order`` permutes the initial work queue; the final set
    does not depend on it.
    """
    rng = as_generator(rng)
    k = _k_array(k)
    if k.shape != (G.n,):
        raise ValueError("threshold array has the wrong length")
    if pi < 1.0 and uniforms is None:
        uniforms = edge_uniforms(G, rng)
    Gp = bond_percolate(G, pi, uniforms=uniforms) if uniforms is not None else G
    active = draw_seed(seed, G, rng, k=k, percolated=Gp)
    seed_size = int(active.sum())
    if order is None:
        order = np.arange(G.n, dtype=np.int64)
    rounds = propagate(Gp.vertex_offsets, Gp.neighbor, k, active, np.asarray(order, dtype=np.int64))
    return _census(G, active, rounds, seed_size)


def cascade_from(G: Multigraph, k, pi: float, u: int, rng=None, uniforms=None) -> DiffusionOutcome:
    """Cascade C(u) triggered by the single vertex ``u``."""
    return run_monotone(G, [u], k, pi, rng, uniforms=uniforms)


@dataclass(frozen=True, eq=False)
class InactiveCensus:
    v_sr_I: dict[tuple[int, int], int]
    e_I: int
    largest_inactive_component: int
    n: int

    @property
    def largest_inactive_fraction(self) -> float:
        return self.largest_inactive_component / self.n if self.n else 0.0


def inactive_subgraph_census(outcome: DiffusionOutcome, G: Multigraph) -> InactiveCensus:
    lab = components(G, ~outcome.active)
    return InactiveCensus(outcome.v_sr_I, outcome.e_I, lab.giant_size, G.n)


# synchronous best-response dynamics -------------------------------------------------


@dataclass(eq=False)
class SyncResult:
    state: np.ndarray
    rounds: int
    period: int  # 1 = equilibrium, >= 2 = cycle, 0 = truncated
    truncated: bool
    b_counts: list[int] = field(default_factory=list)
    cycle_min_fraction: float = 0.0

    @property
    def converged(self) -> bool:
        return self.period == 1

    @property
    def fraction(self) -> float:
        return float(self.state.mean()) if self.state.size else 0.0


def _state_key(state: np.ndarray) -> tuple[bytes, bytes]:
    packed = np.packbits(state).tobytes()
    return hashlib.blake2b(packed, digest_size=8).digest(), packed


def run_synchronous(G: Multigraph, initial, q: float, max_rounds: int | None = None) -> SyncResult:
    """Synchronous best response: next state of i is B iff N_i^B > q d_i.

    Visited states are kept in a table keyed by a 64-bit hash (collisions are
    checked against the packed state), so a return to any earlier state is
    reported as a cycle of the observed period.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    n = G.n
    state = draw_seed(initial, G, as_generator(None))
    deg = G.original_degree
    kq = np.floor(q * deg + 1e-12).astype(np.int64)
    u, v = G.edges()
    loop = u == v
    u, v = u[~loop], v[~loop]
    max_rounds = 10 * n if max_rounds is None else max_rounds
    seen: dict[bytes, list[tuple[int, bytes]]] = {}
    key, packed = _state_key(state)
    seen[key] = [(0, packed)]
    counts = [int(state.sum())]
    for t in range(1, max_rounds + 1):
        nb = np.bincount(u, weights=state[v], minlength=n) + np.bincount(v, weights=state[u], minlength=n)
        new = nb > kq
        if np.array_equal(new, state):
            return SyncResult(state, t - 1, 1, False, counts, counts[-1] / n if n else 0.0)
        key, packed = _state_key(new)
        hit = next((r for r, p in seen.get(key, ()) if p == packed), None)
        counts.append(int(new.sum()))
        if hit is not None:
            cyc = counts[hit:t]
            return SyncResult(new, t, t - hit, False, counts, min(cyc) / n if n else 0.0)
        seen.setdefault(key, []).append((t, packed))
        state = new
    return SyncResult(state, max_rounds, 0, True, counts, counts[-1] / n if n else 0.0)


@dataclass(frozen=True)
class TrialsResult:
    trials: int
    censored: bool


def global_cascade_cutoff(s_analytic: float, seed_fraction: float, relative: float = 0.25, seed_factor: float = 10.0) -> float:
    """Final-fraction cutoff above which a finite-n run counts as global."""
    return max(relative * s_analytic, seed_factor * seed_fraction)


def trials_to_cascade(
    G: Multigraph,
    q: float,
    rng=None,
    cutoff: float = 0.1,
    max_trials: int = 10_000,
    max_rounds: int | None = None,
) -> TrialsResult:
    """Switch both ends of a uniform random edge to B, run best response, repeat.

    Counts attempts until the B fraction reaches ``cutoff`` (the minimum over
    the cycle if the dynamics oscillate). The state is reset to all-A between
    attempts.
    """
    rng = as_generator(rng)
    u, v = G.edges()
    keep = u != v
    u, v = u[keep], v[keep]
    if u.size == 0:
        return TrialsResult(max_trials, True)
    for t in range(1, max_trials + 1):
        e = rng.integers(u.size)
        res = run_synchronous(G, [int(u[e]), int(v[e])], q, max_rounds)
        frac = res.cycle_min_fraction if res.period >= 2 else res.fraction
        if frac >= cutoff:
            return TrialsResult(t, False)
    return TrialsResult(max_trials, True)


def uniform_vertex_seed(n: int, count: int, rng=None) -> ActivationLaw:
    rng = as_generator(rng)
    return ActivationLaw.vertex_set(rng.choice(n, size=min(count, n), replace=False))


def thresholds_for_q(G: Multigraph, q: float) -> ThresholdAssignment:
    """floor(q d) for every vertex, the game's threshold."""
    return ThresholdAssignment(ThresholdLaw.proportional(q).sample(G.original_degree))
