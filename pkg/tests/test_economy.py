from __future__ import annotations

import numpy as np
import pytest

from mreelab.economy import (
    EconomyError,
    PriceError,
    PriceVector,
    make_economy,
    utility_eval,
    validate_economy,
)
from mreelab.generate import random_economy
from mreelab.partition import Partition
from mreelab.utility import UtilitySpec, UtilityError

LIN = UtilitySpec("linear", (1.0, 1.0))


def test_minimal_economy_validates():
    E = make_economy(1, [1.0], [1.0], [UtilitySpec("linear", (1.0,))], [[2.0]])
    assert validate_economy(E).ok


def test_probs_not_summing_flagged_at_path():
    E = make_economy(2, [0.5, 0.6], [1.0], [LIN], [[1.0, 1.0]])
    rep = validate_economy(E)
    assert not rep.ok
    assert rep.failed("probs_sum")
    assert [c.path for c in rep.failures] == ["states.prob"]


def test_negative_endowment_path():
    a = np.ones((2, 1, 2))
    a[1, 0, 1] = -1.0
    E = make_economy(2, [1.0], [1.0, 1.0], [LIN, LIN], a)
    bad = validate_economy(E).failures
    assert bad[0].path == "agents[1].endowment.1[1]"


def test_aggregate_endowment_must_be_positive():
    E = make_economy(2, [1.0], [1.0], [LIN], [[1.0, 0.0]])
    rep = validate_economy(E)
    assert rep.failed("positive_aggregate")
    assert rep.failures[0].kind == "assumption"


def test_cobb_douglas_is_interior_status():
    E = make_economy(2, [1.0], [1.0], [UtilitySpec("cobb_douglas_log", (0.5, 0.5))], [[1.0, 1.0]])
    rep = validate_economy(E)
    assert rep.ok
    assert {c.status for c in rep.checks if c.name in ("continuity", "monotonicity")} == {"interior"}


def test_ces_rho_above_one_fails_concavity():
    E = make_economy(2, [1.0], [1.0], [UtilitySpec("ces", (1.0, 1.0), rho=2.0)], [[1.0, 1.0]])
    assert validate_economy(E).failed("concavity")


def test_cobb_douglas_weights_must_sum_to_one():
    E = make_economy(2, [1.0], [1.0], [UtilitySpec("cobb_douglas_log", (0.5, 0.6))], [[1.0, 1.0]])
    assert validate_economy(E).failed("params")


def test_shape_errors_raise():
    with pytest.raises(EconomyError):
        make_economy(2, [1.0], [1.0], [UtilitySpec("linear", (1.0,))], [[1.0, 1.0]])
    with pytest.raises(EconomyError):
        make_economy(2, [0.5, 0.5], [1.0], [LIN], [[1.0, 1.0]], partitions=[Partition.trivial(3)])
    with pytest.raises(UtilityError):
        UtilitySpec("ces", (1.0, 1.0))
    with pytest.raises(UtilityError):
        UtilitySpec("quadratic", (1.0,))


def test_utility_eval_boundary_of_interior_family():
    E = make_economy(2, [1.0], [1.0], [UtilitySpec("cobb_douglas_log", (0.5, 0.5))], [[1.0, 1.0]])
    assert utility_eval(E, 0, 0, [1.0, 1.0]) == pytest.approx(0.0)
    with pytest.raises(EconomyError):
        utility_eval(E, 0, 0, [1.0, 0.0])


def test_equality_is_field_exact():
    assert random_economy(3) == random_economy(3)
    assert random_economy(3) != random_economy(4)


@pytest.mark.parametrize("seed", range(20))
def test_random_economies_validate(seed):
    assert validate_economy(random_economy(seed)).ok


def test_price_vector_checks():
    PriceVector(np.array([0.5, 0.5]))
    with pytest.raises(PriceError):
        PriceVector(np.array([0.7, 0.7]))
    with pytest.raises(PriceError):
        PriceVector(np.array([1.0, 0.0]))
    q = PriceVector.clamped([2.0, -1.0, 1e-15], 1e-9)
    assert q.p.min() >= 1e-9 and abs(q.p.sum() - 1) <= 1e-12
