"""Finite approximations of compact sets and the set-valued toolkit.

A :class:`CompactSetApprox` is a finite point cloud. When ``convex_hint`` is
set the cloud stands for its convex hull: Hausdorff distances and Minkowski
sums are then computed between polytopes, exactly, from hull vertices. This
is what keeps fine-resolution preferred sets tractable, since a convex set
sampled on a grid is determined by a few hundred hull vertices. Without the
hint every operation treats the cloud as the literal finite set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls
from scipy.spatial import ConvexHull, QhullError, cKDTree

DEDUP_DECIMALS = 12


class SetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CompactSetApprox:
    points: np.ndarray
    resolution: float = 0.0
    convex_hint: bool = False
    method: str = "given"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise SetError("a compact set approximation needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise SetError("non-finite coordinates")
        if np.any(pts < 0):
            raise SetError("coordinates must be >= 0")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def vertices(self) -> np.ndarray:
        return hull_vertices(self.points) if self.convex_hint else self.points

    def same_points(self, other: "CompactSetApprox", atol: float = 0.0) -> bool:
        a, b = _sorted_rows(self.points), _sorted_rows(other.points)
        return a.shape == b.shape and np.allclose(a, b, rtol=0, atol=atol)


def _sorted_rows(P: np.ndarray) -> np.ndarray:
    return P[np.lexsort(P.T[::-1])]


def dedup(P: np.ndarray, decimals: int = DEDUP_DECIMALS) -> np.ndarray:
    """Unique rows, merging points that agree to ``decimals`` places."""
    P = np.asarray(P, dtype=float)
    if len(P) <= 1:
        return P
    keys = np.round(P, decimals) + 0.0  # +0.0 folds -0.0 into 0.0
    _, idx = np.unique(keys, axis=0, return_index=True)
    return P[np.sort(idx)]


# ---------------------------------------------------------------- geometry

def _affine_frame(P: np.ndarray):
    c = P.mean(axis=0)
    X = P - c
    if len(P) == 1 or not np.any(X):
        return c, np.zeros((0, P.shape[1]))
    _, S, Vt = np.linalg.svd(X, full_matrices=False)
    k = int(np.sum(S > 1e-10 * max(S[0], 1.0)))
    return c, Vt[:k]


def hull_vertices(P) -> np.ndarray:
    """Rows of ``P`` that are vertices of its convex hull (handles flat sets)."""
    P = dedup(np.asarray(P, dtype=float))
    if len(P) <= 2:
        return P
    c, B = _affine_frame(P)
    k = B.shape[0]
    if k == 0:
        return P[:1]
    Y = (P - c) @ B.T
    if k == 1:
        lo, hi = int(np.argmin(Y[:, 0])), int(np.argmax(Y[:, 0]))
        return P[sorted({lo, hi})]
    try:
        h = ConvexHull(Y)
    except QhullError:
        return P
    return P[np.sort(h.vertices)]


def _point_segment_dist(q: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    e = B - A
    ee = np.einsum("ij,ij->i", e, e)
    t = np.einsum("ij,ij->i", q - A, e) / np.where(ee > 0, ee, 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(A + t[:, None] * e - q, axis=1)


def _point_triangle_dist(p: np.ndarray, A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Distance from point ``p`` to each triangle (A[i], B[i], C[i]) in R^3."""
    ab, ac, ap = B - A, C - A, p - A
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - B
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - C
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom = va + vb + vc
    safe = np.where(denom != 0, denom, 1.0)
    v = vb / safe
    w = vc / safe
    closest = A + v[:, None] * ab + w[:, None] * ac  # interior of the face
    # vertex and edge regions, in the order of the classic case analysis
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    bc_region = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    closest = np.where(bc_region[:, None], B + t_bc[:, None] * (C - B), closest)
    ac_region = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    closest = np.where(ac_region[:, None], A + t_ac[:, None] * ac, closest)
    c_region = (d6 >= 0) & (d5 <= d6)
    closest = np.where(c_region[:, None], C, closest)
    ab_region = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    closest = np.where(ab_region[:, None], A + t_ab[:, None] * ab, closest)
    b_region = (d3 >= 0) & (d4 <= d3)
    closest = np.where(b_region[:, None], B, closest)
    a_region = (d1 <= 0) & (d2 <= 0)
    closest = np.where(a_region[:, None], A, closest)
    return np.linalg.norm(closest - p, axis=1)


def _qp_dist(q: np.ndarray, V: np.ndarray) -> float:
    # min ||V^T lam - q|| over the simplex; heavy penalty row enforces sum(lam)=1
    scale = max(1.0, float(np.abs(V).max()), float(np.abs(q).max()))
    M = 1e4 * scale
    A = np.vstack([V.T, np.full((1, len(V)), M)])
    b = np.concatenate([q, [M]])
    lam, _ = nnls(A, b)
    lam = lam / lam.sum()
    return float(np.linalg.norm(V.T @ lam - q))


def dist_to_hull(Q, P) -> np.ndarray:
    """Euclidean distance from each row of ``Q`` to conv(P)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    V = hull_vertices(P)
    c, B = _affine_frame(V)
    k = B.shape[0]
    Qc = Q - c
    coords = Qc @ B.T
    perp = np.linalg.norm(Qc - coords @ B, axis=1)
    if k == 0:
        return perp
    Y = (V - c) @ B.T
    if k == 1:
        lo, hi = Y[:, 0].min(), Y[:, 0].max()
        y = coords[:, 0]
        din = np.maximum(np.maximum(lo - y, y - hi), 0.0)
        return np.hypot(perp, din)
    din = np.zeros(len(Q))
    try:
        hull = ConvexHull(Y)
    except QhullError:
        din = np.array([_qp_dist(q, Y) for q in coords])
        return np.hypot(perp, din)
    eq = hull.equations
    scale = max(1.0, float(np.abs(Y).max()))
    viol = coords @ eq[:, :-1].T + eq[:, -1]
    outside = np.flatnonzero(viol.max(axis=1) > 1e-12 * scale)
    simp = hull.simplices
    for j in outside:
        q = coords[j]
        if k == 2:
            din[j] = _point_segment_dist(q, Y[simp[:, 0]], Y[simp[:, 1]]).min()
        elif k == 3:
            din[j] = _point_triangle_dist(q, Y[simp[:, 0]], Y[simp[:, 1]], Y[simp[:, 2]]).min()
        else:
            din[j] = _qp_dist(q, Y)
    return np.hypot(perp, din)


def support_function(A: CompactSetApprox, directions) -> np.ndarray:
    """h_A(d) = max over the cloud of <d, x>, one value per direction row."""
    D = np.atleast_2d(np.asarray(directions, dtype=float))
    return (A.vertices() @ D.T).max(axis=0)


def direction_grid(dim: int, n: int) -> np.ndarray:
    """Deterministic, roughly uniform unit directions."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    if dim == 3:
        k = np.arange(n) + 0.5
        phi = np.arccos(1 - 2 * k / n)
        th = np.pi * (1 + 5 ** 0.5) * k
        return np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)])
    rng = np.random.default_rng(0)
    D = rng.normal(size=(n, dim))
    return D / np.linalg.norm(D, axis=1, keepdims=True)


# ---------------------------------------------------------------- distances

def hausdorff_distance(A: CompactSetApprox, B: CompactSetApprox,
                       hull: Optional[bool] = None) -> float:
    """max{sup_a dist(a, B), sup_b dist(b, A)} with the Euclidean ground metric.

    ``hull=None`` compares convex hulls when both inputs carry ``convex_hint``
    and compares the literal clouds otherwise.
    """
    if A.dim != B.dim:
        raise SetError(f"dimension mismatch {A.dim} != {B.dim}")
    if A.same_points(B):
        return 0.0
    if hull is None:
        hull = A.convex_hint and B.convex_hint
    if hull:
        VA, VB = hull_vertices(A.points), hull_vertices(B.points)
        return float(max(dist_to_hull(VA, VB).max(), dist_to_hull(VB, VA).max()))
    return float(max(_nn_dist(A.points, B.points).max(), _nn_dist(B.points, A.points).max()))


def _scaled_norm(D: np.ndarray) -> np.ndarray:
    # squaring tiny gaps underflows; scale each row first
    m = np.abs(D).max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    return m * np.sqrt(((D / safe[:, None]) ** 2).sum(axis=1))


def _nn_dist(Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Distance from each row of Q to its nearest row of P."""
    _, idx = cKDTree(P).query(Q)
    return _scaled_norm(Q - P[idx])


def dist_to_set(x, A: CompactSetApprox, hull: Optional[bool] = None) -> float:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if hull is None:
        hull = A.convex_hint
    if hull:
        return float(dist_to_hull(x, A.points).min())
    return float(_nn_dist(x, A.points).min())


def kuratowski_limits(seq: Sequence[CompactSetApprox], tail: int, tol: float):
    """Finite surrogates of the lower (Li) and upper (Ls) Kuratowski limits.

    Candidates are all points of all clouds. A candidate is in Li when it is
    within ``tol`` of *every* one of the last ``tail`` sets and in Ls when it
    is within ``tol`` of *at least one* of them. ``None`` marks an empty limit.
    """
    if not seq:
        raise SetError("empty set sequence")
    if not 1 <= tail <= len(seq):
        raise SetError(f"tail={tail} must lie in 1..{len(seq)}")
    cand = dedup(np.vstack([A.points for A in seq]))
    D = np.column_stack([cKDTree(A.points).query(cand)[0] for A in seq[-tail:]])
    res = min(A.resolution for A in seq)

    def build(mask):
        if not mask.any():
            return None
        return CompactSetApprox(cand[mask], res, False, "kuratowski")

    li_mask = D.max(axis=1) <= tol
    ls_mask = D.min(axis=1) <= tol
    return build(li_mask), build(ls_mask)


# ---------------------------------------------------------------- integration

def _pairwise_sum(S: np.ndarray, T: np.ndarray) -> np.ndarray:
    return (S[:, None, :] + T[None, :, :]).reshape(-1, S.shape[1])


def aumann_integral(family: Sequence[CompactSetApprox], weights, *,
                    combo_budget: int = 1_000_000, n_selections: int = 20_000,
                    seed: int = 0, allow_sampling: bool = True) -> CompactSetApprox:
    """Weighted Minkowski sum sum_i w_i F_i of one set per agent.

    Method ladder, recorded in ``method``:

    * ``exact``: every combination, when the product of sizes fits ``combo_budget``;
    * ``support``: all inputs convex, so the sum is the polytope whose support
      function is the weighted sum of the inputs' support functions; computed
      exactly as the hull of sums of hull vertices, agent by agent;
    * ``sampled``: seeded random selections (one point per agent per draw).
    """
    weights = np.asarray(weights, dtype=float)
    if len(family) == 0 or len(family) != len(weights):
        raise SetError("need exactly one set per weight")
    dims = {F.dim for F in family}
    if len(dims) != 1:
        raise SetError(f"inconsistent dimensions {sorted(dims)}")
    convex = all(F.convex_hint for F in family)
    res = max(float(w) * F.resolution for w, F in zip(weights, family))
    sizes = [len(F) for F in family]
    if math.prod(sizes) <= combo_budget:
        S = weights[0] * family[0].points
        for w, F in zip(weights[1:], family[1:]):
            S = dedup(_pairwise_sum(dedup(S), w * F.points))
        return CompactSetApprox(np.maximum(dedup(S), 0.0), res, convex, "exact")
    if convex:
        S = hull_vertices(weights[0] * family[0].points)
        for w, F in zip(weights[1:], family[1:]):
            S = hull_vertices(_pairwise_sum(S, hull_vertices(w * F.points)))
        return CompactSetApprox(np.maximum(S, 0.0), res, True, "support")
    if not allow_sampling:
        raise SetError(
            f"{math.prod(sizes)} combinations exceed combo_budget={combo_budget} "
            "for non-convex inputs and sampling is disabled"
        )
    rng = np.random.default_rng(seed)
    S = np.zeros((n_selections, family[0].dim))
    for w, F in zip(weights, family):
        S += w * F.points[rng.integers(0, len(F), size=n_selections)]
    return CompactSetApprox(dedup(S), res, False, "sampled")
