import json
import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cascadelab.degree_model import ActivationLaw, DegreeDistribution, ThresholdLaw, sample_degree_sequence
from cascadelab.diffusion import (
    assign_thresholds,
    cascade_from,
    draw_seed,
    global_cascade_cutoff,
    inactive_subgraph_census,
    pivotal_set,
    run_monotone,
    run_synchronous,
    thresholds_for_q,
    trials_to_cascade,
)
from cascadelab.graph_gen import Multigraph, bond_percolate, components, configuration_model, edge_uniforms
from cascadelab.rng import make_rng


def random_graph(n, lam, seed):
    rng = make_rng(seed)
    return configuration_model(sample_degree_sequence(DegreeDistribution.poisson(lam), n, rng), rng)


def assert_census(out, G):
    """Every vertex is counted once; edge and neighbour counts agree."""
    assert out.v_H + sum(out.v_sr_I.values()) == G.n
    assert sum(out.v_s_H.values()) == out.v_H
    assert sum(r * c for (s, r), c in out.v_sr_I.items()) == 2 * out.e_I
    assert all(0 <= r <= s for (s, r) in out.v_sr_I)
    assert out.v_H == int(out.active.sum())


def synchronous_monotone(G, seed, k):
    """Round-by-round oracle for the monotone process; returns (active, rounds)."""
    active = seed.copy()
    u, v = G.edges()
    keep = u != v
    u, v = u[keep], v[keep]
    rounds = 0
    while True:
        cnt = np.bincount(u, weights=active[v], minlength=G.n) + np.bincount(v, weights=active[u], minlength=G.n)
        new = active | (cnt > k)
        if np.array_equal(new, active):
            return active, rounds
        active, rounds = new, rounds + 1


class TestMonotone:
    def test_parallel_edges_count_separately(self):
        G = Multigraph.from_edges(2, [0, 0], [1, 1])
        out = run_monotone(G, [0], np.array([0, 1]))
        assert out.active.tolist() == [True, True]

    def test_self_loops_never_count(self):
        G = Multigraph.from_edges(2, [0, 0], [0, 1])
        out = run_monotone(G, [1], np.array([1, 0]))
        assert out.active.tolist() == [False, True]

    def test_rounds_match_round_by_round_oracle(self):
        for seed in range(20):
            G = random_graph(300, 3.0, seed)
            k = thresholds_for_q(G, 0.2).k
            s = make_rng(seed + 100).random(G.n) < 0.02
            ref, rounds = synchronous_monotone(G, s, k)
            out = run_monotone(G, s, k)
            assert np.array_equal(out.active, ref)
            assert out.rounds == rounds

    def test_order_does_not_matter(self):
        G = random_graph(200, 4.0, 1)
        k = thresholds_for_q(G, 0.25).k
        s = make_rng(2).random(G.n) < 0.1
        base = run_monotone(G, s, k).active
        for j in range(20):
            order = make_rng(j).permutation(G.n)
            assert np.array_equal(run_monotone(G, s, k, order=order).active, base)

    def test_thresholds_use_original_degree(self):
        G = Multigraph.from_edges(5, [0, 0, 0, 0], [1, 2, 3, 4])
        H = bond_percolate(G, 0.5, uniforms=np.array([0.1, 0.9, 0.9, 0.9]))
        k = assign_thresholds(H, ThresholdLaw.proportional(0.3)).k
        assert k[0] == 1  # floor(0.3 * 4), not floor(0.3 * 1)

    def test_percolation_blocks_transmission(self):
        G = Multigraph.from_edges(3, [0, 1], [1, 2])
        k = np.zeros(3, dtype=np.int64)
        out = run_monotone(G, [0], k, 0.5, uniforms=np.array([0.2, 0.8]))
        assert out.active.tolist() == [True, True, False]
        # census counts neighbours in the unpercolated graph
        assert out.v_sr_I == {(1, 0): 1}

    def test_uniform_seed_rate(self):
        G = random_graph(20_000, 2.0, 3)
        out = run_monotone(G, ActivationLaw.uniform(0.1), np.full(G.n, 10**6), rng=make_rng(4))
        assert out.seed_size / G.n == pytest.approx(0.1, abs=0.01)

    def test_degree_based_seed(self):
        G = random_graph(5000, 3.0, 5)
        out = run_monotone(G, ActivationLaw.degree_based({3: 1.0}), np.full(G.n, 10**6), rng=make_rng(6))
        assert np.array_equal(out.active, G.original_degree == 3)

    def test_census_and_json(self):
        G = random_graph(500, 3.0, 7)
        k = thresholds_for_q(G, 0.2).k
        out = run_monotone(G, ActivationLaw.uniform(0.05), k, 0.7, make_rng(8))
        assert_census(out, G)
        d = json.loads(json.dumps(out.to_dict()))
        assert d["v_H"] == out.v_H and "active" not in d
        bits = out.to_dict(bitmap=True)["active"]
        unpacked = np.unpackbits(np.frombuffer(bytes.fromhex(bits), np.uint8))[: G.n].astype(bool)
        assert np.array_equal(unpacked, out.active)

    def test_cascade_from_single_vertex(self):
        G = Multigraph.from_edges(4, [0, 1, 2], [1, 2, 3])
        out = cascade_from(G, np.zeros(4, np.int64), 1.0, 3)
        assert out.v_H == 4

    def test_bad_inputs(self):
        G = Multigraph.from_edges(2, [0], [1])
        with pytest.raises(ValueError):
            run_monotone(G, [5], np.zeros(2, np.int64))
        with pytest.raises(ValueError):
            run_monotone(G, [0], np.zeros(3, np.int64))


class TestCouplings:
    @given(st.integers(0, 2**32 - 1), st.floats(1.0, 5.0), st.floats(0.05, 0.45))
    def test_seed_monotone(self, seed, lam, q):
        G = random_graph(150, lam, seed)
        k = thresholds_for_q(G, q).k
        rng = make_rng(seed, 1)
        small = rng.random(G.n) < 0.05
        big = small | (rng.random(G.n) < 0.05)
        a, b = run_monotone(G, small, k).active, run_monotone(G, big, k).active
        assert np.all(b[a])

    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_pi_monotone(self, seed, p1, p2):
        lo, hi = sorted((p1, p2))
        G = random_graph(150, 3.5, seed)
        k = thresholds_for_q(G, 0.2).k
        U = edge_uniforms(G, make_rng(seed, 2))
        s = make_rng(seed, 3).random(G.n) < 0.05
        a = run_monotone(G, s, k, lo, uniforms=U).active
        b = run_monotone(G, s, k, hi, uniforms=U).active
        assert np.all(b[a])

    @given(st.integers(0, 2**32 - 1))
    def test_threshold_monotone(self, seed):
        G = random_graph(150, 3.5, seed)
        rng = make_rng(seed, 4)
        k_hi = rng.integers(0, 4, G.n)
        k_lo = np.maximum(k_hi - rng.integers(0, 2, G.n), 0)
        s = rng.random(G.n) < 0.05
        a = run_monotone(G, s, k_hi).active
        b = run_monotone(G, s, k_lo).active
        assert np.all(b[a])
        assert_census(run_monotone(G, s, k_lo), G)


class TestPivotal:
    def test_pivotal_set_is_giant_of_zero_threshold_vertices(self):
        G = random_graph(3000, 3.0, 11)
        k = thresholds_for_q(G, 0.2).k
        P = pivotal_set(G, k)
        assert np.all(k[P.members] == 0)
        lab = components(G, k == 0)
        assert len(P) == lab.giant_size
        assert np.unique(lab.label[P.members]).size == 1

    def test_pivotal_pair_is_adjacent_and_pivotal(self):
        G = random_graph(2000, 3.0, 12)
        k = thresholds_for_q(G, 0.2).k
        P = set(pivotal_set(G, k).members.tolist())
        for j in range(10):
            pair = np.flatnonzero(draw_seed(ActivationLaw.pivotal_pair(), G, make_rng(j), k=k))
            assert pair.size == 2 and set(pair.tolist()) <= P
            u, v = G.edges()
            assert any({int(a), int(b)} == set(pair.tolist()) for a, b in zip(u, v))

    def test_pivotal_cascade_contains_pivotal_set(self):
        G = random_graph(3000, 3.0, 13)
        k = thresholds_for_q(G, 0.15).k
        P = pivotal_set(G, k)
        out = run_monotone(G, ActivationLaw.pivotal_pair(), k, rng=make_rng(1))
        assert np.all(out.active[P.members])

    def test_inactive_census(self):
        G = Multigraph.from_edges(5, [0, 2, 3], [1, 3, 4])
        out = run_monotone(G, [0], np.zeros(5, np.int64))
        c = inactive_subgraph_census(out, G)
        assert c.largest_inactive_component == 3
        assert c.largest_inactive_fraction == pytest.approx(0.6)


def oscillating_gadget():
    # c=0, a=1, b=2, y=3, x=4, x'=5
    edges = [(0, 1), (0, 2), (0, 3), (1, 4), (2, 5), (4, 5), (4, 3), (5, 3)]
    u, v = zip(*edges)
    return Multigraph.from_edges(6, list(u), list(v))


class TestSynchronous:
    def test_two_cycle(self):
        res = run_synchronous(oscillating_gadget(), [0], 1 / 3)
        assert res.period == 2 and not res.converged
        assert res.b_counts[:3] == [1, 2, 1]
        assert res.cycle_min_fraction == pytest.approx(1 / 6)

    def test_truncation(self):
        res = run_synchronous(oscillating_gadget(), [0], 1 / 3, max_rounds=1)
        assert res.truncated and res.period == 0

    def test_equilibrium(self):
        G = Multigraph.from_edges(4, [0, 1, 2], [1, 2, 3])
        res = run_synchronous(G, [0, 1], 0.4)
        assert res.converged and res.state.all()
        assert run_synchronous(G, [], 0.4).state.sum() == 0

    def test_loops_give_no_credit(self):
        G = Multigraph.from_edges(2, [0, 0], [0, 1])
        # vertex 0 has degree 3, floor(0.4 * 3) = 1, one real B neighbour
        res = run_synchronous(G, [1], 0.4)
        assert not res.state[0]

    def test_matches_best_response_definition(self):
        G = random_graph(100, 4.0, 21)
        res = run_synchronous(G, make_rng(1).random(G.n) < 0.3, 0.3)
        if res.converged:
            u, v = G.edges()
            m = u != v
            nb = np.bincount(u[m], weights=res.state[v[m]], minlength=G.n) + np.bincount(
                v[m], weights=res.state[u[m]], minlength=G.n)
            assert np.array_equal(res.state, nb > np.floor(0.3 * G.original_degree + 1e-12))

    def test_q_range(self):
        with pytest.raises(ValueError):
            run_synchronous(oscillating_gadget(), [0], 1.0)


class TestTrials:
    def test_cycle_graph_cascades_first_try(self):
        n = 50
        G = Multigraph.from_edges(n, list(range(n)), [(i + 1) % n for i in range(n)])
        res = trials_to_cascade(G, 0.3, make_rng(0), cutoff=0.9)
        assert res.trials == 1 and not res.censored

    def test_censored(self):
        G = Multigraph.from_edges(4, [0, 2], [1, 3])
        res = trials_to_cascade(G, 0.3, make_rng(0), cutoff=0.9, max_trials=5)
        assert res.censored and res.trials == 5

    def test_cutoff(self):
        assert global_cascade_cutoff(0.8, 1e-5) == pytest.approx(0.2)
        assert global_cascade_cutoff(0.0, 0.01) == pytest.approx(0.1)


def test_brute_force_small_graphs():
    """Every seed set on every labelled graph with 4 vertices, k constant."""
    pairs = list(itertools.combinations(range(4), 2))
    for mask in range(1 << len(pairs)):
        es = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        G = Multigraph.from_edges(4, [a for a, _ in es], [b for _, b in es])
        for kk in (0, 1, 2):
            k = ThresholdLaw.constant(kk).sample(G.degree)
            for sm in range(16):
                seed = np.array([(sm >> i) & 1 for i in range(4)], dtype=bool)
                ref, _ = synchronous_monotone(G, seed, k)
                assert np.array_equal(run_monotone(G, seed, k).active, ref)
