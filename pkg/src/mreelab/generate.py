"""Named test economies and a seeded random-economy generator."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .economy import Economy, make_economy
from .partition import Partition
from .utility import UtilitySpec

RANDOM_FAMILIES = ("log_shifted", "linear", "ces")


def edgeworth_cd(alpha1: float = 0.6, alpha2: float = 0.5) -> Economy:
    """Two Cobb-Douglas agents holding one good each; p* = (1-a1, a2) / (1-a1+a2)."""
    u1 = UtilitySpec("cobb_douglas_log", (alpha1, 1.0 - alpha1))
    u2 = UtilitySpec("cobb_douglas_log", (alpha2, 1.0 - alpha2))
    return make_economy(2, [1.0], [1.0, 1.0], [u1, u2], [[1.0, 0.0], [0.0, 1.0]])


def edgeworth_price(alpha1: float, alpha2: float) -> np.ndarray:
    """Clearing good 1: alpha1 p1 + alpha2 p2 = p1, so p2/p1 = (1 - alpha1)/alpha2."""
    q = np.array([alpha2, 1.0 - alpha1])
    return q / q.sum()


def two_state_edgeworth(alphas: Sequence[float] = (0.6, 0.5),
                        partitions: Sequence[Partition] | None = None) -> Economy:
    """Agent 1's first weight is ``alphas[s]`` in state s; agent 2 keeps alpha 0.5.

    Default information: agent 1 knows the state, agent 2 does not.
    """
    S = len(alphas)
    u1 = [UtilitySpec("cobb_douglas_log", (a, 1.0 - a)) for a in alphas]
    u2 = [UtilitySpec("cobb_douglas_log", (0.5, 0.5))] * S
    if partitions is None:
        partitions = [Partition.discrete(S), Partition.trivial(S)]
    return make_economy(2, [1.0 / S] * S, [1.0, 1.0], [u1, u2],
                        [[1.0, 0.0], [0.0, 1.0]], partitions=partitions)


def mirror_economy(u: UtilitySpec, endowment: Sequence[float], weight: float = 1.0) -> Economy:
    """Agent 2 is agent 1 with the two goods swapped (utility and endowment)."""
    if u.dim != 2:
        raise ValueError("mirror economies have two goods")
    swapped = UtilitySpec(u.family, tuple(reversed(u.coef)), u.rho)
    a = np.asarray(endowment, dtype=float)
    return make_economy(2, [1.0], [weight, weight], [u, swapped], [a, a[::-1]])


def random_utility(rng: np.random.Generator, goods: int, family: str) -> UtilitySpec:
    coef = rng.uniform(0.5, 2.0, size=goods)
    if family == "ces":
        return UtilitySpec("ces", tuple(coef), rho=float(rng.uniform(0.2, 0.8)))
    if family == "cobb_douglas_log":
        return UtilitySpec(family, tuple(coef / coef.sum()))
    return UtilitySpec(family, tuple(coef))


def random_partition(rng: np.random.Generator, n_states: int) -> Partition:
    return Partition.from_labels(rng.integers(0, n_states, size=n_states).tolist())


def random_economy(seed: int, *, max_goods: int = 3, max_states: int = 4, max_agents: int = 5,
                   families: Sequence[str] = RANDOM_FAMILIES) -> Economy:
    """Seeded random economy with strictly positive endowments.

    Each agent gets one family (drawn from ``families``) with coefficients
    redrawn per state, its own random information partition and a random mass.
    """
    rng = np.random.default_rng(seed)
    goods = int(rng.integers(2, max_goods + 1))
    S = int(rng.integers(1, max_states + 1))
    N = int(rng.integers(2, max_agents + 1))
    probs = rng.dirichlet(np.ones(S))
    probs = probs / probs.sum()
    weights = rng.uniform(0.5, 1.5, size=N)
    utilities = []
    for _ in range(N):
        fam = families[int(rng.integers(len(families)))]
        utilities.append([random_utility(rng, goods, fam) for _ in range(S)])
    endowment = rng.uniform(0.2, 2.0, size=(N, S, goods))
    partitions = [random_partition(rng, S) for _ in range(N)]
    return make_economy(goods, probs.tolist(), weights.tolist(), utilities, endowment,
                        partitions=partitions)
