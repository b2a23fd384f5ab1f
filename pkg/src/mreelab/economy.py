"""The discretised differential-information exchange economy.

States and agents are finite weighted grids, so every integral over agents
or states becomes a weighted sum in the fixed agent/state order. Arrays use
the shapes

* endowment, allocation: ``(n_agents, n_states, goods)``
* priors: ``(n_agents, n_states)`` (stored, never used by a computation)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .partition import Partition
from .utility import UtilitySpec


class EconomyError(ValueError):
    """Structural or invariant violation, tagged with the offending field path."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateSpace:
    states: tuple
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "probs", _frozen(self.probs))
        if not self.states:
            raise EconomyError("state list is empty", "states")
        if self.probs.shape != (len(self.states),):
            raise EconomyError("one probability per state required", "states.prob")
        if len(set(self.states)) != len(self.states):
            raise EconomyError("duplicate state ids", "states.id")

    def __len__(self):
        return len(self.states)

    def index(self, state_id) -> int:
        try:
            return self.states.index(state_id)
        except ValueError:
            raise EconomyError(f"unknown state id {state_id!r}", "states.id") from None


@dataclass(frozen=True)
class AgentGrid:
    agents: tuple
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "weights", _frozen(self.weights))
        if not self.agents:
            raise EconomyError("agent list is empty", "agents")
        if self.weights.shape != (len(self.agents),):
            raise EconomyError("one weight per agent required", "agents.weight")
        if len(set(self.agents)) != len(self.agents):
            raise EconomyError("duplicate agent ids", "agents.id")

    def __len__(self):
        return len(self.agents)

    def index(self, agent_id) -> int:
        try:
            return self.agents.index(agent_id)
        except ValueError:
            raise EconomyError(f"unknown agent id {agent_id!r}", "agents.id") from None


@dataclass(frozen=True, eq=False)
class Economy:
    goods: int
    state_space: StateSpace
    agent_grid: AgentGrid
    partitions: tuple[Partition, ...]
    utilities: tuple[tuple[UtilitySpec, ...], ...]
    endowment: np.ndarray
    priors: Optional[np.ndarray] = None

    def __post_init__(self):
        n, s, l = self.n_agents, self.n_states, self.goods
        if not isinstance(self.goods, (int, np.integer)) or self.goods < 1:
            raise EconomyError("goods must be a positive integer", "goods")
        object.__setattr__(self, "partitions", tuple(self.partitions))
        object.__setattr__(self, "utilities", tuple(tuple(u) for u in self.utilities))
        object.__setattr__(self, "endowment", _frozen(self.endowment))
        if self.priors is not None:
            object.__setattr__(self, "priors", _frozen(self.priors))
            if self.priors.shape != (n, s):
                raise EconomyError(f"priors must have shape {(n, s)}", "agents.prior")
        if len(self.partitions) != n:
            raise EconomyError("one partition per agent required", "agents.partition")
        for i, part in enumerate(self.partitions):
            if part.n_states != s:
                raise EconomyError("partition over the wrong state set", f"agents[{i}].partition")
        if len(self.utilities) != n or any(len(row) != s for row in self.utilities):
            raise EconomyError("one utility per (agent, state) required", "agents.utility")
        for i, row in enumerate(self.utilities):
            for k, u in enumerate(row):
                if u.dim != l:
                    raise EconomyError(
                        f"utility has {u.dim} coefficients, expected {l}",
                        f"agents[{i}].utility.{self.state_space.states[k]}",
                    )
        if self.endowment.shape != (n, s, l):
            raise EconomyError(
                f"endowment shape {self.endowment.shape} != {(n, s, l)}", "agents.endowment"
            )

    @property
    def n_agents(self) -> int:
        return len(self.agent_grid)

    @property
    def n_states(self) -> int:
        return len(self.state_space)

    @property
    def weights(self) -> np.ndarray:
        return self.agent_grid.weights

    @property
    def probs(self) -> np.ndarray:
        return self.state_space.probs

    def utility(self, t: int, s: int) -> UtilitySpec:
        return self.utilities[t][s]

    def aggregate_endowment(self, s: int) -> np.ndarray:
        a = self.endowment[:, s, :]
        total = np.zeros(self.goods)
        for i in range(self.n_agents):
            total = total + self.weights[i] * a[i]
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, Economy):
            return NotImplemented
        same_priors = (self.priors is None and other.priors is None) or (
            self.priors is not None
            and other.priors is not None
            and np.array_equal(self.priors, other.priors)
        )
        return (
            self.goods == other.goods
            and self.state_space.states == other.state_space.states
            and np.array_equal(self.probs, other.probs)
            and self.agent_grid.agents == other.agent_grid.agents
            and np.array_equal(self.weights, other.weights)
            and self.partitions == other.partitions
            and self.utilities == other.utilities
            and np.array_equal(self.endowment, other.endowment)
            and same_priors
        )

    __hash__ = None


class PriceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PriceVector:
    """A normalised interior price: every coordinate >= p_min, sum 1."""

    p: np.ndarray
    p_min: float = 1e-9

    def __post_init__(self):
        p = _frozen(self.p)
        object.__setattr__(self, "p", p)
        if p.ndim != 1 or p.size == 0:
            raise PriceError("price must be a nonempty vector")
        if not np.all(np.isfinite(p)) or p.min() < self.p_min * (1 - 1e-12):
            raise PriceError(f"price {p.tolist()} has a coordinate below p_min={self.p_min}")
        if abs(p.sum() - 1.0) > 1e-12:
            raise PriceError(f"price {p.tolist()} does not sum to 1")

    @classmethod
    def clamped(cls, raw, p_min: float = 1e-9) -> "PriceVector":
        """Clamp below at ``p_min`` and renormalise (the solver's projection)."""
        q = np.maximum(np.asarray(raw, dtype=float), p_min)
        fixed = np.zeros(q.size, dtype=bool)
        for _ in range(q.size):
            q[fixed] = p_min
            free = ~fixed
            q[free] *= (1.0 - p_min * fixed.sum()) / q[free].sum()
            low = free & (q < p_min)
            if not low.any():
                break
            fixed |= low
        return cls(q, p_min)

    @classmethod
    def uniform(cls, goods: int) -> "PriceVector":
        return cls(np.full(goods, 1.0 / goods))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.p, dtype=dtype)

    def __len__(self):
        return self.p.size

    def __eq__(self, other):
        if not isinstance(other, PriceVector):
            return NotImplemented
        return np.array_equal(self.p, other.p)

    __hash__ = None


def as_price(p) -> np.ndarray:
    """Plain float array view of a PriceVector or array-like price."""
    return np.asarray(p, dtype=float)


@dataclass(frozen=True)
class Check:
    name: str
    status: str  # "pass" | "fail" | "interior"
    path: str = ""
    detail: str = ""
    kind: str = "assumption"  # or "invariant"

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def failed(self, name: str) -> bool:
        return any(c.name == name and not c.ok for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "status": c.status, "path": c.path, "detail": c.detail, "kind": c.kind}
                for c in self.checks
            ],
        }


def _utility_checks(u: UtilitySpec, path: str) -> list[Check]:
    c = u.c
    out = []
    bad = not np.all(np.isfinite(c)) or np.any(c <= 0)
    out.append(Check("params", "fail" if bad else "pass", path,
                     "coefficients must be finite and > 0" if bad else "", "invariant"))
    if u.family == "cobb_douglas_log":
        s = float(c.sum())
        ok = abs(s - 1.0) <= 1e-12
        out.append(Check("params", "pass" if ok else "fail", path,
                         "" if ok else f"alpha sums to {s}, expected 1", "invariant"))
    if u.family == "ces":
        rho = u.rho
        bad_rho = not np.isfinite(rho) or rho <= 0 or rho == 1.0
        out.append(Check("params", "fail" if bad_rho else "pass", path,
                         f"rho={rho} outside (0, 1)" if bad_rho else "", "invariant"))
    # every family is continuous where it is defined
    if u.interior_only:
        out.append(Check("continuity", "interior", path, "continuous on the open orthant only"))
    else:
        out.append(Check("continuity", "pass", path))
    # strict monotonicity, analytic per family
    if bad:
        a3 = "fail"
    elif u.interior_only:
        a3 = "interior"
    elif u.family == "ces" and not (u.rho > 0):
        a3 = "fail"
    else:
        a3 = "pass"
    out.append(Check("monotonicity", a3, path,
                     "strict on the open orthant only" if a3 == "interior" else ""))
    # concavity, analytic per family
    if u.family == "ces" and u.rho > 1.0:
        out.append(Check("concavity", "fail", path, f"ces with rho={u.rho} > 1 is not concave"))
    elif u.family in ("log_shifted", "cobb_douglas_log") and np.any(c < 0):
        out.append(Check("concavity", "fail", path, "a negative log weight is convex in that good"))
    else:
        out.append(Check("concavity", "pass", path))
    return out


def validate_economy(E: Economy) -> ValidationReport:
    """Check invariants and the model assumptions; pure, never raises on values.

    Assumption checks: ``positive_aggregate`` (aggregate endowment >> 0 in
    every state), ``continuity``, ``monotonicity`` and ``concavity`` of each
    utility. Cobb-Douglas utilities report ``interior`` for the middle two.
    """
    checks: list[Check] = []
    probs = E.probs
    ok = bool(np.all(probs > 0))
    checks.append(Check("probs_positive", "pass" if ok else "fail", "states.prob",
                        "" if ok else "probabilities must be > 0", "invariant"))
    total = float(probs.sum())
    ok = abs(total - 1.0) <= 1e-12
    checks.append(Check("probs_sum", "pass" if ok else "fail", "states.prob",
                        "" if ok else f"sum = {total!r} != 1", "invariant"))
    w = E.weights
    ok = bool(np.all(np.isfinite(w)) and np.all(w > 0))
    checks.append(Check("weights_positive", "pass" if ok else "fail", "agents.weight",
                        "" if ok else "agent weights must be finite and > 0", "invariant"))
    a = E.endowment
    neg = np.argwhere(~(a >= 0))
    if neg.size:
        i, k, h = neg[0]
        checks.append(Check("endowment_nonnegative", "fail",
                            f"agents[{i}].endowment.{E.state_space.states[k]}[{h}]",
                            f"entry {a[i, k, h]!r} < 0", "invariant"))
    else:
        checks.append(Check("endowment_nonnegative", "pass", "agents.endowment", "", "invariant"))
    if E.priors is not None:
        pr = E.priors
        ok = bool(np.all(pr >= 0) and np.allclose(pr.sum(axis=1), 1.0, atol=1e-12, rtol=0))
        checks.append(Check("priors", "pass" if ok else "fail", "agents.prior",
                            "" if ok else "each prior must be a probability vector", "invariant"))
    for i in range(E.n_agents):
        for k in range(E.n_states):
            path = f"agents[{i}].utility.{E.state_space.states[k]}"
            checks.extend(_utility_checks(E.utility(i, k), path))
    for k in range(E.n_states):
        agg = E.aggregate_endowment(k)
        ok = bool(np.all(agg > 0))
        checks.append(Check("positive_aggregate", "pass" if ok else "fail",
                            f"states.{E.state_space.states[k]}",
                            "" if ok else f"aggregate endowment {agg.tolist()} not >> 0"))
    return ValidationReport(tuple(checks))


def utility_eval(E: Economy, t: int, s: int, x) -> float:
    """Utility of agent ``t`` in state ``s`` at bundle ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (E.goods,):
        raise EconomyError(f"bundle must have {E.goods} coordinates")
    if np.any(x < 0):
        raise EconomyError("bundle has a negative coordinate")
    u = E.utility(t, s)
    if u.interior_only and np.any(x <= 0):
        raise EconomyError(f"{u.family} is only defined on the interior; got {x.tolist()}")
    return float(u.values(x))


def make_economy(
    goods: int,
    probs: Sequence[float],
    weights: Sequence[float],
    utilities,
    endowment,
    partitions=None,
    states=None,
    agents=None,
    priors=None,
) -> Economy:
    """Convenience constructor with integer ids and trivial partitions by default.

    ``utilities`` may be one UtilitySpec per agent (shared across states) or a
    per-agent list of per-state specs.
    """
    n, s = len(weights), len(probs)
    states = tuple(states) if states is not None else tuple(range(1, s + 1))
    agents = tuple(agents) if agents is not None else tuple(range(1, n + 1))
    rows = []
    for u in utilities:
        rows.append(tuple([u] * s) if isinstance(u, UtilitySpec) else tuple(u))
    if partitions is None:
        partitions = [Partition.trivial(s)] * n
    endowment = np.asarray(endowment, dtype=float)
    if endowment.ndim == 2:
        endowment = np.repeat(endowment[:, None, :], s, axis=1)
    return Economy(
        goods=goods,
        state_space=StateSpace(states, probs),
        agent_grid=AgentGrid(agents, weights),
        partitions=tuple(partitions),
        utilities=tuple(rows),
        endowment=endowment,
        priors=priors,
    )
