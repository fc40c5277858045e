import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coopcf import (ConfigurationError, ParameterError, SearchBudget, SteeringConfig,
                    best_cooperative_rate, candidate_subsets, coefficient_validity,
                    enumerate_coefficients, optimize_steering, preset_scenario,
                    prune_coefficients, rate_coop, rate_nc, rate_superposition)


def brute_force_coefficients(L, M, bound, strict):
    """Every admissible matrix, canonicalized so each column's first nonzero entry is positive."""
    out = set()
    for flat in itertools.product(range(-bound, bound + 1), repeat=L * M):
        A = np.array(flat).reshape(L, M)
        if not coefficient_validity(A, strict):
            continue
        for m in range(M):
            col = A[:, m]
            if col[np.flatnonzero(col)[0]] < 0:
                A[:, m] = -col
        out.add(tuple(A.ravel()))
    return out


def small_budget():
    return SearchBudget(2, 5, 8)


# budget ---------------------------------------------------------------------

def test_budget_parse_roundtrip():
    b = SearchBudget.parse("2:5:7")
    assert (b.coeff_bound, b.grid_points, b.refine_iters) == (2, 5, 7)
    assert str(b) == "2:5:7"
    for bad in ("2:5", "a:b:c", "1:2:3:4"):
        with pytest.raises(ConfigurationError):
            SearchBudget.parse(bad)
    with pytest.raises(ParameterError):
        SearchBudget(0, 5, 5)


# coefficients ---------------------------------------------------------------

def test_enumeration_examples():
    As = enumerate_coefficients(2, 1, 1, strict=True)
    assert [tuple(A.ravel()) for A in As] == [(1, 1), (1, -1)]
    np.testing.assert_array_equal(enumerate_coefficients(1, 1, 1), [[[1]]])
    As22 = enumerate_coefficients(2, 2, 1)
    assert all(np.linalg.matrix_rank(A) == 2 for A in As22)
    assert not any(np.array_equal(A, np.ones((2, 2))) for A in As22)
    assert enumerate_coefficients(1, 2, 2).shape == (0, 1, 2)


@pytest.mark.parametrize("L,M,bound,strict", [
    (2, 1, 2, False), (2, 1, 3, True), (3, 1, 2, False), (2, 2, 2, False), (3, 2, 1, False),
    (2, 2, 2, True), (3, 2, 1, True),
])
def test_enumeration_matches_brute_force(L, M, bound, strict):
    got = enumerate_coefficients(L, M, bound, strict=strict)
    keys = [tuple(A.ravel()) for A in got]
    assert len(keys) == len(set(keys))
    assert set(keys) == brute_force_coefficients(L, M, bound, strict)


def test_enumeration_without_dedup_doubles_columns():
    assert len(enumerate_coefficients(2, 1, 2, dedup=False)) == 2 * len(enumerate_coefficients(2, 1, 2))


def test_pruning_rule_and_fallback():
    As = enumerate_coefficients(2, 1, 3)
    H = np.array([1.0, 1.0])
    kept = prune_coefficients(As, H, 1.0)
    assert np.all(np.sum(kept[:, :, 0] ** 2, axis=1) <= 3)
    # pruned matrices have zero non-cooperative rate
    dropped = [A for A in As if np.sum(A ** 2) > 3]
    assert all(rate_nc(H, 1.0, A) == 0.0 for A in dropped)
    tiny = prune_coefficients(As[-3:], H * 0, 1.0)
    assert len(tiny) == 3


def test_candidate_subsets():
    assert candidate_subsets(1) == [frozenset(), frozenset({0})]
    assert candidate_subsets(3) == [frozenset(), frozenset({0}), frozenset({1}), frozenset({2}),
                                    frozenset({0, 1, 2})]
    assert len(candidate_subsets(3, all_subsets=True)) == 8


# steering optimization ------------------------------------------------------

def check_result(res, H, G, P):
    V = res.V
    assert np.all(np.sum(V ** 2, axis=1) <= 1 + 1e-12)
    bd = rate_coop(H, G, P, res.A, SteeringConfig(res.B, V))
    assert abs(bd.overall - res.best_rate) <= 1e-12


def grid_superposition_max(H, P, a, num=801):
    """Dense-grid maximum of the superposition rate over nonnegative amplitudes."""
    x = np.linspace(0.0, 1.0, num)
    v1, v2 = np.meshgrid(x, x, indexing="ij")
    e1, e2 = H[0] * v1, H[1] * v2
    aa = a[0] ** 2 + a[1] ** 2
    gap = (a[0] * e2 - a[1] * e1) ** 2
    r = 0.5 * np.log2(1 + P * (e1 ** 2 + e2 ** 2)) - 0.5 * np.log2(aa + P * gap)
    return float(np.max(np.maximum(r, 0.0)))


def test_no_inter_transmitter_link_gives_superposition_rate():
    H = np.array([1.0, 0.6])
    G = np.zeros((2, 2))
    res = optimize_steering(H, G, 10.0, [1, 1], {0, 1}, SearchBudget(2, 9, 30))
    check_result(res, H, G, 10.0)
    assert res.B == frozenset()
    want = grid_superposition_max(H, 10.0, (1, 1))
    assert res.best_rate == pytest.approx(want, abs=1e-4)
    assert res.best_rate >= rate_superposition(H, 10.0, [1, 1], [0.6, 1.0])


def test_example1_solution_is_symmetric():
    ch = preset_scenario("example1", np.sqrt(10.0))
    res = best_cooperative_rate(ch.H, ch.G, 10.0, strict=True, subsets=[(), (0, 1)])
    check_result(res, ch.H, ch.G, 10.0)
    assert res.B == frozenset({0, 1})
    np.testing.assert_allclose(np.abs(res.V[0]), np.abs(res.V[1]), atol=1e-2)


def test_vanishing_power():
    ch = preset_scenario("example1", 1.0)
    res = best_cooperative_rate(ch.H, ch.G, 1e-9, small_budget())
    assert res.best_rate == pytest.approx(0.0, abs=1e-8)


def test_zf_beams_returned_are_orthogonal():
    ch = preset_scenario("example4", 0.5)
    res = optimize_steering(ch.H, ch.G, 10.0, np.eye(2, dtype=int), {0, 1}, small_budget(),
                            beams="zf", fallback=False)
    check_result(res, ch.H, ch.G, 10.0)
    proj = ch.H.T @ res.V[:, 1:]
    assert abs(proj[0, 1]) <= 1e-10 and abs(proj[1, 0]) <= 1e-10
    assert res.B == frozenset({0, 1})


def test_bad_beam_mode():
    with pytest.raises(ConfigurationError):
        optimize_steering(np.ones(2), np.zeros((2, 2)), 1.0, [1, 1], {0}, beams="random")


@given(st.integers(0, 10_000))
def test_search_dominates_noncooperative(seed):
    rng = np.random.default_rng(seed)
    H = np.sqrt(rng.exponential(size=(2, 1)))
    G = np.sqrt(rng.exponential(size=(2, 2))) * (1 - np.eye(2))
    P = float(10 ** rng.uniform(0, 2))
    res = best_cooperative_rate(H, G, P, SearchBudget(2, 3, 4))
    check_result(res, H, G, P)
    best_nc = max(rate_nc(H, P, A) for A in enumerate_coefficients(2, 1, 2))
    assert res.best_rate >= best_nc - 1e-12


def test_budget_monotone_and_deterministic():
    rng = np.random.default_rng(3)
    budgets = [SearchBudget(1, 3, 2), SearchBudget(2, 3, 2), SearchBudget(2, 5, 2),
               SearchBudget(2, 5, 10), SearchBudget(3, 9, 20)]
    for _ in range(6):
        H = np.sqrt(rng.exponential(size=(2, 1)))
        G = np.sqrt(rng.exponential(size=(2, 2))) * (1 - np.eye(2))
        vals = [best_cooperative_rate(H, G, 10.0, b).best_rate for b in budgets]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
        again = best_cooperative_rate(H, G, 10.0, budgets[-1])
        assert again.best_rate == vals[-1]


def test_three_transmitters_two_receivers():
    rng = np.random.default_rng(8)
    H = np.sqrt(rng.exponential(size=(3, 2)))
    G = np.sqrt(rng.exponential(size=(3, 3))) * (1 - np.eye(3))
    res = best_cooperative_rate(H, G, 10.0, SearchBudget(1, 3, 3))
    check_result(res, H, G, 10.0)
    best_nc = max(rate_nc(H, 10.0, A) for A in enumerate_coefficients(3, 2, 1))
    assert res.best_rate >= best_nc - 1e-12


def test_explicit_coefficients():
    ch = preset_scenario("example3", 0.0)
    res = best_cooperative_rate(ch.H, ch.G, 10.0, small_budget(), coefficients=[[1], [1]])
    np.testing.assert_array_equal(res.A, [[1], [1]])
    assert res.best_rate > 0.2
