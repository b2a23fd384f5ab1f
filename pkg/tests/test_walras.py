from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mreelab.aggregate import aggregate_bound, aggregate_preferred_set, continuity_probe
from mreelab.config import Config
from mreelab.economy import make_economy
from mreelab.generate import edgeworth_cd, edgeworth_price, mirror_economy, random_economy
from mreelab.utility import UtilitySpec
from mreelab.walras import (
    EquilibriumError,
    aggregate_excess_certificate,
    clearing_residual,
    excess_demand,
    solve_state_equilibrium,
)
from mreelab.correspondences import sample_preferred_set


def bisection_price(a1, a2, lo=1e-9, hi=1 - 1e-9):
    """Oracle: clear good 1 of the Cobb-Douglas Edgeworth box by bisection on p1."""
    def z1(p1):
        p2 = 1 - p1
        return a1 * p1 / p1 + a2 * p2 / p1 - 1.0  # agent 1 sells good 1, agent 2 good 2

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if z1(mid) > 0:
            lo = mid
        else:
            hi = mid
    p1 = 0.5 * (lo + hi)
    return np.array([p1, 1 - p1])


@pytest.mark.parametrize("a1,a2", [(0.6, 0.5), (0.3, 0.7), (0.9, 0.1)])
def test_edgeworth_matches_bisection(a1, a2):
    eq = solve_state_equilibrium(edgeworth_cd(a1, a2), 0)
    oracle = bisection_price(a1, a2)
    assert np.abs(eq.price.p - oracle).max() <= 1e-9
    assert np.abs(eq.price.p - edgeworth_price(a1, a2)).max() <= 1e-9
    assert eq.residual_norm <= 1e-8


def test_excess_demand_golden(edgeworth):
    z = excess_demand(edgeworth, 0, [0.5, 0.5])
    assert np.allclose(z, [0.1, -0.1], atol=1e-15)


def test_single_good_degenerate():
    E = make_economy(1, [1.0], [1.0, 2.0], [UtilitySpec("linear", (1.0,))] * 2, [[1.0], [3.0]])
    eq = solve_state_equilibrium(E, 0)
    assert eq.price.p.tolist() == [1.0]
    assert np.array_equal(eq.allocation, E.endowment[:, 0, :])
    assert eq.residual_norm == 0.0
    assert aggregate_excess_certificate(E, 0, [1.0], 0.1) == 0.0


@pytest.mark.parametrize("u", [UtilitySpec("log_shifted", (2.0, 1.0)),
                               UtilitySpec("ces", (1.0, 3.0), rho=0.5),
                               UtilitySpec("linear", (2.0, 1.0)),
                               UtilitySpec("cobb_douglas_log", (0.7, 0.3))])
def test_mirror_symmetry(u):
    E = mirror_economy(u, [1.5, 0.5])
    assert np.abs(excess_demand(E, 0, [0.5, 0.5])).max() <= 1e-12
    eq = solve_state_equilibrium(E, 0)
    assert np.abs(eq.price.p - 0.5).max() <= 1e-8


@given(st.integers(0, 40), st.integers(0, 10_000))
def test_walras_law(seed, pseed):
    E = random_economy(seed)
    r = np.random.default_rng(pseed)
    p = r.uniform(0.01, 1.0, E.goods)
    p = p / p.sum()
    s = int(r.integers(E.n_states))
    z = excess_demand(E, s, p)
    assert abs(p @ z) <= 1e-9 * (1 + np.abs(z).sum())


@pytest.mark.parametrize("seed", range(12))
def test_random_states_clear(seed):
    E = random_economy(seed)
    for s in range(E.n_states):
        eq = solve_state_equilibrium(E, s)
        assert eq.residual_norm <= 1e-8
        assert np.all(eq.allocation >= 0)
        # recomputation identity
        assert np.array_equal(clearing_residual(E, s, eq.allocation), eq.clearing_residual)
        assert abs(eq.price.p.sum() - 1) <= 1e-12 and eq.price.p.min() >= 1e-9


def test_solver_is_deterministic():
    E = random_economy(9)
    a = solve_state_equilibrium(E, 1)
    b = solve_state_equilibrium(E, 1)
    assert np.array_equal(a.price.p, b.price.p)
    assert a.trajectory_hash == b.trajectory_hash


def test_homotopy_reaches_same_equilibrium(edgeworth):
    eq = solve_state_equilibrium(edgeworth, 0, homotopy=True)
    assert eq.method.startswith("homotopy")
    assert np.abs(eq.price.p - edgeworth_price(0.6, 0.5)).max() <= 1e-9


def test_nonconvergence_reports_best_iterate(edgeworth):
    with pytest.raises(EquilibriumError) as err:
        solve_state_equilibrium(edgeworth, 0, Config(max_iter=1))
    assert err.value.best_price is not None
    assert np.isfinite(err.value.best_residual)


def test_certificate_at_equilibrium(edgeworth):
    p = solve_state_equilibrium(edgeworth, 0).price.p
    d, method = aggregate_excess_certificate(edgeworth, 0, p, 1e-3, return_method=True)
    assert d <= 5e-3
    assert method.startswith("window")
    # off equilibrium the certificate is strictly positive
    assert aggregate_excess_certificate(edgeworth, 0, [0.3, 0.7], 0.05) > 1e-3


def test_symmetric_certificate():
    E = mirror_economy(UtilitySpec("log_shifted", (2.0, 1.0)), [1.5, 0.5])
    assert aggregate_excess_certificate(E, 0, [0.5, 0.5], 0.01) <= 2 * 2 * 0.01


# ---------------------------------------------------------------- aggregate set

LINEAR_EDGEWORTH = make_economy(2, [1.0], [1.0, 1.0],
                                [UtilitySpec("linear", (1.0, 1.0)), UtilitySpec("linear", (2.0, 1.0))],
                                [[1.0, 0.0], [0.0, 1.0]])


def test_aggregate_matches_selection_enumeration():
    p, r = np.array([0.5, 0.5]), 0.25
    E = LINEAR_EDGEWORTH
    A = aggregate_preferred_set(E, 0, p, r, mode="full")
    assert A.method == "exact"
    c1 = sample_preferred_set(E, 0, 0, p, r).points
    c2 = sample_preferred_set(E, 1, 0, p, r).points
    brute = {tuple(np.round(x + y, 12)) for x, y in itertools.product(c1, c2)}
    assert {tuple(np.round(v, 12)) for v in A.points} == brute


def test_aggregate_single_good_and_single_agent():
    E = make_economy(1, [1.0], [0.5, 2.0], [UtilitySpec("linear", (1.0,))] * 2, [[1.0], [3.0]])
    A = aggregate_preferred_set(E, 0, [1.0], 0.1)
    assert A.points.tolist() == [[6.5]]
    E1 = make_economy(2, [1.0], [1.0], [UtilitySpec("log_shifted", (1.0, 2.0))], [[1.0, 1.0]])
    A1 = aggregate_preferred_set(E1, 0, [0.4, 0.6], 0.1, mode="full")
    assert A1.same_points(sample_preferred_set(E1, 0, 0, [0.4, 0.6], 0.1))


@pytest.mark.parametrize("seed", range(4))
def test_aggregate_is_bounded(seed):
    E = random_economy(seed)
    p = np.full(E.goods, 1.0 / E.goods)
    A = aggregate_preferred_set(E, 0, p, 0.25)
    assert np.all(A.points <= aggregate_bound(E, 0, p) + 1e-12)


def test_probe_constant_and_degenerate(edgeworth):
    p = np.array([5 / 9, 4 / 9])
    assert continuity_probe(edgeworth, 0, [p, p], p, 0.01) == [0.0, 0.0]
    E = make_economy(1, [1.0], [1.0], [UtilitySpec("linear", (1.0,))], [[2.0]])
    assert continuity_probe(E, 0, [[1.0]] * 3, [1.0], 0.1) == [0.0] * 3


def test_probe_off_simplex_point_is_unresolvable(edgeworth):
    p = np.array([5 / 9, 4 / 9])
    d = continuity_probe(edgeworth, 0, [p + [0.5, -0.5]], p, 1e-3)
    assert d == [np.inf]
