"""JSON economy files and solution files.

Economy file layout::

    {
      "goods": 2,
      "states": [{"id": "s1", "prob": 1.0}],
      "agents": [
        {"id": "a1", "weight": 1.0,
         "partition": [["s1"]],
         "utility": {"family": "cobb_douglas_log", "params": {"alpha": [0.6, 0.4]},
                     "overrides": {"s1": {"params": {"alpha": [0.5, 0.5]}}}},
         "endowment": {"s1": [1.0, 0.0]},
         "prior": {"s1": 1.0}}
      ]
    }

``partition`` defaults to a single block (no private information),
``endowment`` may be one vector shared by all states, ``overrides`` and
``prior`` are optional. Utility parameter keys per family: linear ``coef``;
log_shifted and cobb_douglas_log ``alpha``; ces ``weights`` and ``rho``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

import numpy as np

from .economy import (
    AgentGrid,
    Economy,
    EconomyError,
    StateSpace,
    validate_economy,
)
from .maximin import PriceSystem
from .partition import Partition, PartitionError
from .utility import UtilityError, UtilitySpec

SCHEMA_VERSION = 1

PARAM_KEYS = {
    "linear": ("coef",),
    "log_shifted": ("alpha",),
    "cobb_douglas_log": ("alpha",),
    "ces": ("weights", "rho"),
}


class SpecSyntaxError(EconomyError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}", "")


def _load_json(source: Union[str, Path]) -> Any:
    text = Path(source).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(exc.msg, exc.lineno, exc.colno) from None


def _need(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise EconomyError("expected an object", path)
    if key not in obj:
        raise EconomyError(f"missing required key {key!r}", path)
    return obj[key]


def _vector(v, n: int, path: str) -> list[float]:
    if not isinstance(v, list) or len(v) != n:
        raise EconomyError(f"expected a list of {n} numbers", path)
    try:
        return [float(x) for x in v]
    except (TypeError, ValueError):
        raise EconomyError("entries must be numbers", path) from None


def _utility(family: str, params: dict, goods: int, path: str) -> UtilitySpec:
    if family not in PARAM_KEYS:
        raise EconomyError(f"unknown utility family {family!r}", path + ".family")
    if not isinstance(params, dict):
        raise EconomyError("params must be an object", path + ".params")
    unknown = set(params) - set(PARAM_KEYS[family])
    if unknown:
        raise EconomyError(f"unexpected parameters {sorted(unknown)} for {family}", path + ".params")
    key = PARAM_KEYS[family][0]
    coef = _vector(_need(params, key, path + ".params"), goods, f"{path}.params.{key}")
    try:
        if family == "ces":
            rho = _need(params, "rho", path + ".params")
            return UtilitySpec(family, tuple(coef), rho=float(rho))
        return UtilitySpec(family, tuple(coef))
    except (UtilityError, TypeError, ValueError) as exc:
        raise EconomyError(str(exc), path + ".params") from None


def economy_from_dict(doc: dict, validate: bool = True) -> Economy:
    """Build an Economy from a parsed spec document.

    With ``validate`` every failing check of :func:`validate_economy` raises
    an :class:`EconomyError` carrying the check's field path.
    """
    if not isinstance(doc, dict):
        raise EconomyError("top level must be an object", "")
    goods = _need(doc, "goods", "")
    if not isinstance(goods, int) or isinstance(goods, bool) or goods < 1:
        raise EconomyError("goods must be a positive integer", "goods")
    states = _need(doc, "states", "")
    if not isinstance(states, list) or not states:
        raise EconomyError("expected a nonempty list", "states")
    ids, probs = [], []
    for k, st in enumerate(states):
        ids.append(_need(st, "id", f"states[{k}]"))
        try:
            probs.append(float(_need(st, "prob", f"states[{k}]")))
        except (TypeError, ValueError):
            raise EconomyError("prob must be a number", f"states[{k}].prob") from None
    space = StateSpace(tuple(ids), probs)
    key_of = {str(sid): k for k, sid in enumerate(space.states)}
    S = len(ids)

    def state_index(sid, path):
        k = key_of.get(str(sid))
        if k is None:
            raise EconomyError(f"unknown state id {sid!r}", path)
        return k

    agents = _need(doc, "agents", "")
    if not isinstance(agents, list) or not agents:
        raise EconomyError("expected a nonempty list", "agents")
    aids, weights, parts, utils, endow, priors = [], [], [], [], [], []
    for i, ag in enumerate(agents):
        base = f"agents[{i}]"
        aids.append(_need(ag, "id", base))
        try:
            weights.append(float(_need(ag, "weight", base)))
        except (TypeError, ValueError):
            raise EconomyError("weight must be a number", base + ".weight") from None

        blocks = ag.get("partition")
        if blocks is None:
            parts.append(Partition.trivial(S))
        else:
            if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
                raise EconomyError("partition must be a list of lists of state ids", base + ".partition")
            try:
                idx = tuple(tuple(state_index(x, base + ".partition") for x in b) for b in blocks)
                parts.append(Partition(idx, S))
            except PartitionError as exc:
                raise EconomyError(str(exc), base + ".partition") from None

        u = _need(ag, "utility", base)
        upath = base + ".utility"
        family = _need(u, "family", upath)
        params = _need(u, "params", upath)
        row = [None] * S
        overrides = u.get("overrides", {}) or {}
        if not isinstance(overrides, dict):
            raise EconomyError("overrides must map state ids to utilities", upath + ".overrides")
        for sid, ov in overrides.items():
            k = state_index(sid, f"{upath}.overrides")
            opath = f"{upath}.overrides.{sid}"
            if not isinstance(ov, dict):
                raise EconomyError("expected an object", opath)
            row[k] = _utility(ov.get("family", family), _need(ov, "params", opath), goods, opath)
        for k in range(S):
            if row[k] is None:
                row[k] = _utility(family, params, goods, upath)
        utils.append(tuple(row))

        e = _need(ag, "endowment", base)
        epath = base + ".endowment"
        if isinstance(e, list):
            vec = _vector(e, goods, epath)
            endow.append([vec] * S)
        elif isinstance(e, dict):
            rows = [None] * S
            for sid, v in e.items():
                rows[state_index(sid, epath)] = _vector(v, goods, f"{epath}.{sid}")
            missing = [space.states[k] for k in range(S) if rows[k] is None]
            if missing:
                raise EconomyError(f"no endowment for states {missing}", epath)
            endow.append(rows)
        else:
            raise EconomyError("endowment must be a vector or a map state id -> vector", epath)

        pr = ag.get("prior")
        if pr is None:
            priors.append(None)
        elif isinstance(pr, dict):
            vec = [0.0] * S
            for sid, v in pr.items():
                vec[state_index(sid, base + ".prior")] = float(v)
            priors.append(vec)
        else:
            priors.append(_vector(pr, S, base + ".prior"))

    if any(p is None for p in priors) and not all(p is None for p in priors):
        raise EconomyError("give a prior for every agent or for none", "agents.prior")
    E = Economy(
        goods=goods,
        state_space=space,
        agent_grid=AgentGrid(tuple(aids), weights),
        partitions=tuple(parts),
        utilities=tuple(utils),
        endowment=np.array(endow, dtype=float),
        priors=None if priors[0] is None else np.array(priors, dtype=float),
    )
    if validate:
        report = validate_economy(E)
        for c in report.failures:
            raise EconomyError(f"{c.name}: {c.detail}".rstrip(": "), c.path)
    return E


def parse_economy(path: Union[str, Path], validate: bool = True) -> Economy:
    return economy_from_dict(_load_json(path), validate=validate)


def _params(u: UtilitySpec) -> dict:
    key = PARAM_KEYS[u.family][0]
    out = {key: list(u.coef)}
    if u.family == "ces":
        out["rho"] = u.rho
    return out


def economy_to_dict(E: Economy) -> dict:
    """Inverse of :func:`economy_from_dict`; state 0's utility is the base."""
    sid = E.state_space.states
    agents = []
    for i in range(E.n_agents):
        base = E.utility(i, 0)
        util = {"family": base.family, "params": _params(base)}
        overrides = {}
        for k in range(1, E.n_states):
            u = E.utility(i, k)
            if u != base:
                overrides[str(sid[k])] = {"family": u.family, "params": _params(u)}
        if overrides:
            util["overrides"] = overrides
        ag = {
            "id": E.agent_grid.agents[i],
            "weight": float(E.weights[i]),
            "partition": [[sid[k] for k in b] for b in E.partitions[i].blocks],
            "utility": util,
            "endowment": {str(sid[k]): E.endowment[i, k].tolist() for k in range(E.n_states)},
        }
        if E.priors is not None:
            ag["prior"] = {str(sid[k]): float(E.priors[i, k]) for k in range(E.n_states)}
        agents.append(ag)
    return {
        "goods": int(E.goods),
        "states": [{"id": s, "prob": float(p)} for s, p in zip(sid, E.probs)],
        "agents": agents,
    }


def serialize(E: Economy) -> str:
    return json.dumps(economy_to_dict(E), indent=2)


def solution_to_dict(E: Economy, f, pi: PriceSystem) -> dict:
    f = np.asarray(f, dtype=float)
    sid = [str(s) for s in E.state_space.states]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "solution",
        "prices": {s: pi[k].tolist() for k, s in enumerate(sid)},
        "allocation": {
            str(a): {s: f[i, k].tolist() for k, s in enumerate(sid)}
            for i, a in enumerate(E.agent_grid.agents)
        },
    }


def solution_from_dict(E: Economy, doc: dict, p_min: float = 1e-9):
    """Return ``(allocation, PriceSystem)`` from a solution document."""
    version = _need(doc, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise EconomyError(f"unsupported schema_version {version!r}", "schema_version")
    prices = _need(doc, "prices", "")
    alloc = _need(doc, "allocation", "")
    S, N, l = E.n_states, E.n_agents, E.goods
    P = np.empty((S, l))
    for k, s in enumerate(E.state_space.states):
        P[k] = _vector(_need(prices, str(s), "prices"), l, f"prices.{s}")
    f = np.empty((N, S, l))
    for i, a in enumerate(E.agent_grid.agents):
        rows = _need(alloc, str(a), "allocation")
        for k, s in enumerate(E.state_space.states):
            f[i, k] = _vector(_need(rows, str(s), f"allocation.{a}"), l, f"allocation.{a}.{s}")
    try:
        pi = PriceSystem.from_array(P, p_min)
    except ValueError as exc:
        raise EconomyError(str(exc), "prices") from None
    return f, pi


def load_solution(E: Economy, path: Union[str, Path], p_min: float = 1e-9):
    return solution_from_dict(E, _load_json(path), p_min)
