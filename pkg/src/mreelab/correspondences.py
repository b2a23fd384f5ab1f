"""Budget sets, truncation boxes, demand and preferred sets of single agents."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import DEFAULT, Config
from .economy import Economy, as_price
from .setval import CompactSetApprox, dedup
from .utility import numeric_demand

# floor(gamma / r + eps) keeps exact multiples of r on the grid despite rounding
_GRID_EPS = 1e-9
_CHUNK = 1_000_000


class DemandError(RuntimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class SamplingBudgetError(RuntimeError):
    def __init__(self, cells: float, budget: int, suggested: float):
        self.cells = cells
        self.budget = budget
        self.suggested_resolution = suggested
        super().__init__(
            f"grid would need {cells:.3g} cells > budget {budget}; "
            f"try resolution >= {suggested:.3g}"
        )


@dataclass(frozen=True)
class TruncationBox:
    upper: np.ndarray

    @property
    def gamma(self) -> float:
        return float(self.upper[0])

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x <= self.upper * (1 + 1e-12) + 1e-15))


def delta_min(p) -> float:
    """Smallest price coordinate."""
    return float(np.min(as_price(p)))


def wealth(E: Economy, t: int, s: int, p) -> float:
    return float(as_price(p) @ E.endowment[t, s])


def truncation_bound(E: Economy, t: int, s: int, p) -> TruncationBox:
    gamma = float(E.endowment[t, s].sum()) / delta_min(p)
    return TruncationBox(np.full(E.goods, gamma))


def in_budget(E: Economy, t: int, s: int, p, x, cfg: Config = DEFAULT) -> bool:
    p = as_price(p)
    return bool(p @ np.asarray(x, dtype=float) - p @ E.endowment[t, s] <= cfg.tol_budget)


def demand(E: Economy, t: int, s: int, p, cfg: Config = DEFAULT,
           method: str = "closed") -> np.ndarray:
    """Utility maximiser over the budget set.

    ``closed`` uses the family's closed form (linear ties go to the
    lexicographically smallest optimal corner); ``numeric`` runs projected
    gradient ascent and raises :class:`DemandError` if it does not settle.
    """
    p = as_price(p)
    u = E.utility(t, s)
    w = wealth(E, t, s, p)
    if method == "closed":
        return u.demand(p, w)
    if method != "numeric":
        raise ValueError(f"unknown demand method {method!r}")
    x, it, step = numeric_demand(u, p, w, cfg.demand_max_iter, cfg.demand_tol)
    if step > cfg.demand_tol and it >= cfg.demand_max_iter:
        raise DemandError(f"projected gradient did not converge in {it} iterations", step)
    return x


def demand_face(E: Economy, t: int, s: int, p) -> np.ndarray:
    """Vertices of the demand set (one row unless a linear agent is indifferent)."""
    p = as_price(p)
    return E.utility(t, s).face_vertices(p, wealth(E, t, s, p))


def preferred_membership(E: Economy, t: int, s: int, p, x, cfg: Config = DEFAULT,
                         truncated: bool = True) -> bool:
    """Membership in C^X (or in C when ``truncated`` is False)."""
    x = np.asarray(x, dtype=float)
    u = E.utility(t, s)
    target = float(u.values(demand(E, t, s, p, cfg)))
    ok = float(u.values(x)) >= target - cfg.tol_pref
    if truncated:
        ok = ok and truncation_bound(E, t, s, p).contains(x)
    return bool(ok)


def _axis(gamma: float, r: float) -> np.ndarray:
    K = int(math.floor(gamma / r + _GRID_EPS))
    return np.minimum(np.arange(K + 1) * r, gamma)


def _suggest(gamma: float, dim: int, budget: int) -> float:
    per_axis = max(budget ** (1.0 / dim) - 1.0, 1.0)
    return gamma / per_axis


def grid_cells(E: Economy, t: int, s: int, p, resolution: float) -> float:
    gamma = truncation_bound(E, t, s, p).gamma
    return float(math.floor(gamma / resolution + _GRID_EPS) + 1) ** E.goods


def sample_preferred_set(E: Economy, t: int, s: int, p, resolution: float,
                         cfg: Config = DEFAULT, mode: str = "full",
                         anchors: Optional[np.ndarray] = None) -> CompactSetApprox:
    """Grid sample of C^X(t, s, p) at step ``resolution``, demand point appended.

    Modes:

    * ``full``: every grid point of the truncation box in C^X;
    * ``hull``: per grid column (all axes but the last fixed) only the lowest
      and highest member. C^X is convex, so each column meets it in an
      interval and the convex hull is unchanged;
    * ``window``: grid points within ``cfg.window`` steps of each row of
      ``anchors`` (default: the demand-set vertices), anchors appended. A
      subset of the full cloud, used for local certificates.
    """
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    p = as_price(p)
    u = E.utility(t, s)
    d = demand(E, t, s, p, cfg)
    target = float(u.values(d)) - cfg.tol_pref
    gamma = truncation_bound(E, t, s, p).gamma
    K = int(math.floor(gamma / resolution + _GRID_EPS))
    l = E.goods
    extra = [d[None, :]]

    if mode == "window":
        if anchors is None:
            anchors = demand_face(E, t, s, p)
        anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
        idx = []
        span = np.arange(-cfg.window, cfg.window + 2)
        for a in anchors:
            base = np.floor(a / resolution + _GRID_EPS).astype(int)
            ranges = [np.unique(np.clip(base[h] + span, 0, K)) for h in range(l)]
            mesh = np.meshgrid(*ranges, indexing="ij")
            idx.append(np.stack([m.ravel() for m in mesh], axis=1))
        I = np.unique(np.vstack(idx), axis=0)
        X = np.minimum(I * resolution, gamma)
        keep = u.values(X) >= target
        pts = np.vstack([X[keep], anchors, d[None, :]])
        return CompactSetApprox(dedup(pts), resolution, True, "window")

    cells = float(K + 1) ** l
    if mode == "full":
        if cells > cfg.point_budget:
            raise SamplingBudgetError(cells, cfg.point_budget, _suggest(gamma, l, cfg.point_budget))
        axis = _axis(gamma, resolution)
        found = []
        lead = axis.size ** (l - 1)
        if l == 1:
            X = axis[:, None]
            found.append(X[u.values(X) >= target])
        else:
            rest = np.stack([m.ravel() for m in np.meshgrid(*([axis] * (l - 1)), indexing="ij")], axis=1)
            step = max(1, _CHUNK // lead)
            for i0 in range(0, axis.size, step):
                first = axis[i0:i0 + step]
                X = np.column_stack([np.repeat(first, lead), np.tile(rest, (first.size, 1))])
                found.append(X[u.values(X) >= target])
        pts = np.vstack(found + extra)
        return CompactSetApprox(dedup(pts), resolution, True, "grid")

    if mode != "hull":
        raise ValueError(f"unknown sampling mode {mode!r}")
    if cells > cfg.cell_budget:
        raise SamplingBudgetError(cells, cfg.cell_budget, _suggest(gamma, l, cfg.cell_budget))
    axis = _axis(gamma, resolution)
    if l == 1:
        X = axis[:, None]
        members = X[u.values(X) >= target]
        found = [members[[0, -1]]] if len(members) else []
    else:
        cols = np.stack([m.ravel() for m in np.meshgrid(*([axis] * (l - 1)), indexing="ij")], axis=1)
        n_last = axis.size
        step = max(1, _CHUNK // n_last)
        found = []
        for c0 in range(0, len(cols), step):
            C = cols[c0:c0 + step]
            X = np.concatenate([np.repeat(C, n_last, axis=0), np.tile(axis, C.shape[0])[:, None]], axis=1)
            ok = (u.values(X) >= target).reshape(C.shape[0], n_last)
            hit = ok.any(axis=1)
            if not hit.any():
                continue
            lo = ok.argmax(axis=1)
            hi = n_last - 1 - ok[:, ::-1].argmax(axis=1)
            Ch = C[hit]
            found.append(np.column_stack([Ch, axis[lo[hit]]]))
            found.append(np.column_stack([Ch, axis[hi[hit]]]))
    pts = np.vstack(found + extra)
    return CompactSetApprox(dedup(pts), resolution, True, "grid-hull")
