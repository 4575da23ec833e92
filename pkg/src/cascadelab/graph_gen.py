"""Configuration-model multigraphs and the graph surgery the diffusion needs."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, TextIO

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .degree_model import DegreeSequence
from .rng import as_generator


class SimpleGraphError(RuntimeError):
    def __init__(self, attempts: int):
        super().__init__(f"no simple graph after {attempts} attempts")
        self.attempts = attempts


@dataclass(frozen=True, eq=False)
class Multigraph:
    """Half-edge incidence structure.

    Half-edges are stored grouped by owner: the half-edges of vertex ``v`` are
    ``vertex_offsets[v]:vertex_offsets[v+1]``. ``mate`` is a fixed-point-free
    involution pairing half-edges into edges; a self-loop pairs two half-edges
    of the same vertex. ``original_degree`` survives bond percolation so that
    thresholds can keep referring to the degree in the unpercolated graph.
    """

    n: int
    half_edge_owner: np.ndarray
    mate: np.ndarray
    vertex_offsets: np.ndarray
    original_degree: np.ndarray

    @classmethod
    def from_edges(cls, n: int, u, v, original_degree=None) -> "Multigraph":
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        if u.shape != v.shape:
            raise ValueError("endpoint arrays differ in length")
        if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
            raise ValueError("edge endpoint out of range")
        m = u.size
        owners = np.concatenate([u, v])
        order = np.argsort(owners, kind="stable")
        pos = np.empty(2 * m, dtype=np.int64)
        pos[order] = np.arange(2 * m)
        partner = np.concatenate([np.arange(m) + m, np.arange(m)])
        mate = pos[partner[order]]
        counts = np.bincount(owners, minlength=n)
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        deg = counts.astype(np.int64) if original_degree is None else np.asarray(original_degree, np.int64)
        return cls(n, owners[order], mate, offsets, deg)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.vertex_offsets)

    @property
    def num_half_edges(self) -> int:
        return int(self.mate.size)

    @property
    def num_edges(self) -> int:
        return self.num_half_edges // 2

    @cached_property
    def neighbor(self) -> np.ndarray:
        """neighbor[h]: the vertex at the other end of half-edge h."""
        return self.half_edge_owner[self.mate]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """One (u, v) pair per edge, in canonical half-edge order."""
        h = np.flatnonzero(np.arange(self.mate.size) < self.mate)
        return self.half_edge_owner[h], self.half_edge_owner[self.mate[h]]

    def num_self_loops(self) -> int:
        u, v = self.edges()
        return int(np.count_nonzero(u == v))

    def num_multi_edges(self) -> int:
        """Number of surplus parallel edges between distinct vertices."""
        u, v = self.edges()
        keep = u != v
        a, b = np.minimum(u[keep], v[keep]), np.maximum(u[keep], v[keep])
        if a.size == 0:
            return 0
        keys = a * self.n + b
        return int(keys.size - np.unique(keys).size)

    def is_simple(self) -> bool:
        return self.num_self_loops() == 0 and self.num_multi_edges() == 0

    def edge_set(self) -> list[tuple[int, int]]:
        u, v = self.edges()
        return sorted((int(min(a, b)), int(max(a, b))) for a, b in zip(u, v))

    def to_csr(self, keep: np.ndarray | None = None) -> sparse.csr_matrix:
        """Adjacency counts (loops dropped), optionally restricted to ``keep``."""
        u, v = self.edges()
        m = u != v
        if keep is not None:
            m &= keep[u] & keep[v]
        u, v = u[m], v[m]
        data = np.ones(2 * u.size, dtype=np.int64)
        return sparse.csr_matrix(
            (data, (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(self.n, self.n)
        )


def configuration_model(d: DegreeSequence | np.ndarray, rng=None) -> Multigraph:
    """Pair all half-edges by a uniformly random perfect matching."""
    if not isinstance(d, DegreeSequence):
        d = DegreeSequence(d)
    if not d.is_even:
        raise ValueError(f"degree sum {d.total} is odd; no perfect matching of half-edges")
    rng = as_generator(rng)
    deg = d.degrees
    owner = np.repeat(np.arange(d.n, dtype=np.int64), deg)
    perm = rng.permutation(owner.size)
    mate = np.empty(owner.size, dtype=np.int64)
    mate[perm[0::2]] = perm[1::2]
    mate[perm[1::2]] = perm[0::2]
    offsets = np.concatenate([[0], np.cumsum(deg)]).astype(np.int64)
    return Multigraph(d.n, owner, mate, offsets, deg.copy())


def to_simple(G: Multigraph, mode: str = "reject", max_attempts: int = 1000, rng=None) -> Multigraph:
    """Return a simple graph with (``reject``) or derived from (``erase``) G's degrees.

    ``reject`` resamples the configuration model until it is simple, giving a
    uniform simple graph with the same degrees. ``erase`` drops self-loops and
    collapses parallel edges; degrees may decrease.
    """
    if G.is_simple():
        return G
    if mode == "erase":
        u, v = G.edges()
        keep = u != v
        a, b = np.minimum(u[keep], v[keep]), np.maximum(u[keep], v[keep])
        keys = np.unique(a * G.n + b)
        H = Multigraph.from_edges(G.n, keys // G.n, keys % G.n)
        return H
    if mode != "reject":
        raise ValueError(f"unknown mode {mode!r}")
    rng = as_generator(rng)
    seq = DegreeSequence(G.degree)
    for _ in range(max_attempts):
        H = configuration_model(seq, rng)
        if H.is_simple():
            return H
    raise SimpleGraphError(max_attempts)


def edge_uniforms(G: Multigraph, rng=None) -> np.ndarray:
    """One U(0,1] draw per edge (canonical order); edge kept iff U <= pi."""
    rng = as_generator(rng)
    return 1.0 - rng.random(G.num_edges)


def bond_percolate(G: Multigraph, pi: float, rng=None, uniforms: np.ndarray | None = None) -> Multigraph:
    """Keep each edge independently with probability ``pi``.

    Passing the same ``uniforms`` for several values of ``pi`` couples the
    percolated graphs monotonically. Vertices keep their original degrees.
    """
    if not 0.0 <= pi <= 1.0:
        raise ValueError("pi must lie in [0, 1]")
    if pi == 1.0 and uniforms is None:
        return G
    if uniforms is None:
        uniforms = edge_uniforms(G, rng)
    u, v = G.edges()
    keep = uniforms <= pi
    return Multigraph.from_edges(G.n, u[keep], v[keep], original_degree=G.original_degree)


@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    label: np.ndarray  # -1 for vertices outside the kept set
    sizes: np.ndarray
    giant: int  # -1 when there are no components

    @property
    def count(self) -> int:
        return int(self.sizes.size)

    @property
    def giant_size(self) -> int:
        return int(self.sizes[self.giant]) if self.giant >= 0 else 0

    def members(self, cid: int) -> np.ndarray:
        return np.flatnonzero(self.label == cid)


def components(G: Multigraph, keep: np.ndarray | Callable[[np.ndarray], np.ndarray] | None = None) -> ComponentLabeling:
    """Connected components of the subgraph induced by the kept vertices."""
    if keep is None:
        mask = np.ones(G.n, dtype=bool)
    elif callable(keep):
        mask = np.asarray(keep(np.arange(G.n)), dtype=bool)
    else:
        mask = np.asarray(keep, dtype=bool)
    label = np.full(G.n, -1, dtype=np.int64)
    if not mask.any():
        return ComponentLabeling(label, np.zeros(0, dtype=np.int64), -1)
    _, raw = csgraph.connected_components(G.to_csr(mask), directed=False)
    _, dense = np.unique(raw[mask], return_inverse=True)
    label[mask] = dense
    sizes = np.bincount(dense)
    return ComponentLabeling(label, sizes, int(np.argmax(sizes)))


def write_edge_list(G: Multigraph, out: TextIO) -> None:
    """One ``u v`` line per edge; self-loops appear as ``u u``."""
    u, v = G.edges()
    for a, b in zip(u.tolist(), v.tolist()):
        out.write(f"{a} {b}\n")
