from __future__ import annotations

import numpy as np
import pytest
from dataclasses import replace

from mreelab import maximin
from mreelab.config import Config
from mreelab.correspondences import preferred_membership
from mreelab.economy import PriceVector, make_economy
from mreelab.generate import edgeworth_cd, edgeworth_price, random_economy, two_state_edgeworth
from mreelab.maximin import (
    InfoStructure,
    PriceSystem,
    build_price_system,
    compute_maximin_ree,
    in_bree,
    info_structure,
    maximin_utility,
    sigma_pi_partition,
    simplex_lattice,
    verify_maximin_ree,
)
from mreelab.partition import Partition
from mreelab.utility import UtilitySpec
from mreelab.walras import solve_state_equilibrium


def ps(*rows):
    return PriceSystem.from_array(np.array(rows, dtype=float))


def test_sigma_pi_examples():
    assert sigma_pi_partition(ps([0.5, 0.5], [0.5, 0.5], [0.6, 0.4]), 1e-6) == \
        Partition(((0, 1), (2,)), 3)
    assert sigma_pi_partition(ps([0.2, 0.8], [0.5, 0.5], [0.6, 0.4]), 1e-6) == Partition.discrete(3)
    assert sigma_pi_partition(ps([0.5, 0.5], [0.5, 0.5]), 0.0) == \
        Partition.trivial(2)


def test_sigma_pi_transitive_closure():
    # chained within tolerance, ends farther apart than tol
    P = ps([0.5, 0.5], [0.5 + 6e-8, 0.5 - 6e-8], [0.5 + 1.2e-7, 0.5 - 1.2e-7])
    assert sigma_pi_partition(P, 1e-7) == Partition.trivial(3)
    assert sigma_pi_partition(P, 0.0) == Partition.discrete(3)


def _info(E, blocks):
    return InfoStructure(tuple(blocks), Partition.trivial(E.n_states), 0.0)


def test_maximin_utility_goldens():
    u = [UtilitySpec("linear", (1.0, 1.0))] * 2
    E = make_economy(2, [0.5, 0.5], [1.0], [u], [[1.0, 1.0]])
    G = _info(E, [Partition.trivial(2)])
    plan = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert maximin_utility(E, 0, 0, plan, G) == 3.0
    Gd = _info(E, [Partition.discrete(2)])
    assert maximin_utility(E, 0, 1, plan, Gd) == 5.0
    const = np.array([[1.0, 1.0], [1.0, 1.0]])
    assert maximin_utility(E, 0, 0, const, G) == 2.0
    with pytest.raises(KeyError):
        maximin_utility(E, 0, 0, {0: [1.0, 1.0]}, G)


def test_in_bree():
    E = two_state_edgeworth()
    pi = ps([0.5, 0.5], [0.4, 0.6])
    G = _info(E, [Partition.trivial(2)] * 2)
    endow = E.endowment[0]
    assert in_bree(E, 0, 0, pi, endow, G)
    bad = endow.copy()
    bad[1] += [0.0, 0.1]
    assert not in_bree(E, 0, 0, pi, bad, G)
    Gd = _info(E, [Partition.discrete(2)] * 2)
    assert in_bree(E, 0, 0, pi, bad, Gd)


def test_two_state_price_system(two_state):
    pi = build_price_system(two_state)
    assert np.abs(pi[0] - edgeworth_price(0.6, 0.5)).max() <= 1e-9
    assert np.abs(pi[1] - [0.5, 0.5]).max() <= 1e-9


def test_single_state_matches_walras(edgeworth):
    f, pi, cert, _ = compute_maximin_ree(edgeworth)
    eq = solve_state_equilibrium(edgeworth, 0)
    assert np.array_equal(pi[0], eq.price.p)
    assert np.array_equal(f[:, 0, :], eq.allocation)
    assert cert.verdict == "pass"


def test_identical_states_are_non_revealing():
    E0 = edgeworth_cd()
    E = make_economy(2, [0.3, 0.7], [1.0, 1.0], [E0.utility(0, 0), E0.utility(1, 0)],
                     [[1.0, 0.0], [0.0, 1.0]],
                     partitions=[Partition.discrete(2), Partition.trivial(2)])
    f, pi, cert, _ = compute_maximin_ree(E)
    assert np.array_equal(pi[0], pi[1])
    assert cert.info.sigma == Partition.trivial(2)
    assert cert.info.joined == E.partitions
    assert cert.verdict == "pass"


def test_two_state_is_fully_revealing(two_state):
    f, pi, cert, _ = compute_maximin_ree(two_state)
    assert cert.verdict == "pass"
    assert all(G == Partition.discrete(2) for G in cert.info.joined)
    for t in range(2):
        for s in range(2):
            u = float(two_state.utility(t, s).values(f[t, s]))
            assert maximin_utility(two_state, t, s, f[t], cert.info) == u


def test_tampered_allocation_flags_clearing(two_state):
    f, pi, cert, _ = compute_maximin_ree(two_state)
    g = f.copy()
    g[0, 1, 0] += 0.1
    bad = verify_maximin_ree(two_state, g, pi)
    assert bad.verdict == "fail" and not bad.clearing_ok
    w = two_state.weights[0]
    assert bad.clearing_residuals[1, 0] - cert.clearing_residuals[1, 0] == pytest.approx(w * 0.1, abs=1e-15)


def test_endowment_is_not_maximin_optimal(edgeworth):
    pi = PriceSystem((PriceVector(edgeworth_price(0.6, 0.5)),))
    cert = verify_maximin_ree(edgeworth, edgeworth.endowment, pi)
    # Cobb-Douglas utility is -inf at a corner endowment, so any interior plan improves
    assert cert.best_improvement > 1e-4
    assert cert.verdict == "fail"
    assert cert.clearing_ok and cert.budget_ok


def test_interior_endowment_deviation_found():
    E = make_economy(2, [1.0], [1.0, 1.0],
                     [UtilitySpec("log_shifted", (3.0, 1.0)), UtilitySpec("log_shifted", (1.0, 3.0))],
                     [[1.0, 1.0], [1.0, 1.0]])
    pi = PriceSystem((PriceVector(np.array([0.5, 0.5])),))
    cert = verify_maximin_ree(E, E.endowment, pi)
    assert 1e-4 < cert.best_improvement < np.inf


def test_repair_step_replaces_off_demand_bundles(monkeypatch, edgeworth):
    real = maximin.solve_all_states

    def endowment_solver(E, cfg):
        return [replace(eq, allocation=E.endowment[:, eq.state, :].copy()) for eq in real(E, cfg)]

    monkeypatch.setattr(maximin, "solve_all_states", endowment_solver)
    f, pi, cert, _ = compute_maximin_ree(edgeworth)
    assert cert.repairs == ((0, 0), (1, 0))
    assert cert.verdict == "pass"


@pytest.mark.parametrize("seed", range(8))
def test_per_state_membership_implies_pass(seed):
    E = random_economy(seed)
    f, pi, cert, _ = compute_maximin_ree(E)
    members = all(preferred_membership(E, t, s, pi[s], f[t, s], truncated=False)
                  for t in range(E.n_agents) for s in range(E.n_states))
    assert members
    assert cert.deviation_ok


@pytest.mark.parametrize("seed", range(4))
def test_maximin_dominance_and_refinement(seed):
    E = random_economy(seed)
    f, pi, cert, _ = compute_maximin_ree(E)
    G = cert.info
    for t in range(E.n_agents):
        assert G.joined[t].refines(E.partitions[t]) and G.joined[t].refines(G.sigma)
        for s in range(E.n_states):
            m = maximin_utility(E, t, s, f[t], G)
            for w in G.block(t, s):
                assert m <= float(E.utility(t, w).values(f[t, w]))


def test_certificate_recomputation_is_bit_exact():
    E = random_economy(4)
    f, pi, cert, _ = compute_maximin_ree(E)
    again = verify_maximin_ree(E, f, pi, Config(), cert.repairs, cert.notes)
    assert again.to_dict(E) == cert.to_dict(E)


def test_simplex_lattice():
    L = simplex_lattice(3, 4)
    assert len(L) == 15
    assert np.allclose(L.sum(axis=1), 1.0)


def test_info_structure_requires_matching_universe(two_state):
    pi = ps([0.5, 0.5], [0.5, 0.5])
    G = info_structure(two_state, pi, 1e-7)
    assert G.sigma == Partition.trivial(2)
    assert G.joined[0] == Partition.discrete(2)
