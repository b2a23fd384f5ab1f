"""Utility families: values, gradients and closed-form demand.

Four families are supported, all parameterised by a positive coefficient
vector ``coef``:

=================  ===================================  ===================
family             U(x)                                 extra
=================  ===================================  ===================
linear             sum c_h x_h
log_shifted        sum a_h log(1 + x_h)
ces                (sum w_h x_h**rho) ** (1/rho)        0 < rho < 1
cobb_douglas_log   sum a_h log(x_h)                     sum a_h = 1,
                                                        interior only
=================  ===================================  ===================
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

FAMILIES = ("linear", "log_shifted", "ces", "cobb_douglas_log")

# relative gap below which two bang-per-buck ratios count as tied
TIE_RTOL = 1e-12


class UtilityError(ValueError):
    pass


@dataclass(frozen=True)
class UtilitySpec:
    family: str
    coef: tuple[float, ...]
    rho: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UtilityError(f"unknown utility family {self.family!r}")
        object.__setattr__(self, "coef", tuple(float(c) for c in self.coef))
        if self.family == "ces":
            if self.rho is None:
                raise UtilityError("ces utility needs rho")
            object.__setattr__(self, "rho", float(self.rho))
        elif self.rho is not None:
            raise UtilityError(f"rho is only meaningful for ces, not {self.family}")

    @property
    def interior_only(self) -> bool:
        return self.family == "cobb_douglas_log"

    @property
    def dim(self) -> int:
        return len(self.coef)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.coef, dtype=float)

    def values(self, X) -> np.ndarray:
        """Vectorised utility over the last axis of ``X``.

        Boundary points of interior-only families evaluate to ``-inf`` rather
        than raising; use :func:`utility_value` for the checked scalar version.
        """
        X = np.asarray(X, dtype=float)
        c = self.c
        if self.family == "linear":
            return X @ c
        if self.family == "log_shifted":
            return np.log1p(X) @ c
        if self.family == "ces":
            rho = self.rho
            inner = np.power(X, rho) @ c
            return np.power(inner, 1.0 / rho)
        with np.errstate(divide="ignore"):
            logs = np.log(X)
        out = logs @ c
        return np.where(np.any(X <= 0, axis=-1), -np.inf, out)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = self.c
        if self.family == "linear":
            return c.copy()
        if self.family == "log_shifted":
            return c / (1.0 + x)
        if self.family == "ces":
            rho = self.rho
            inner = float(np.power(x, rho) @ c)
            with np.errstate(divide="ignore"):
                g = c * np.power(inner, 1.0 / rho - 1.0) * np.power(x, rho - 1.0)
            return np.where(np.isfinite(g), g, 1e300)
        with np.errstate(divide="ignore"):
            g = c / x
        return np.where(np.isfinite(g), g, 1e300)

    def demand(self, p, wealth: float) -> np.ndarray:
        """Closed-form maximiser of U over ``{x >= 0 : <p, x> <= wealth}``."""
        p = np.asarray(p, dtype=float)
        if wealth <= 0.0:
            return np.zeros_like(p)
        c = self.c
        if self.family == "cobb_douglas_log":
            return c * wealth / p
        if self.family == "ces":
            sigma = 1.0 / (1.0 - self.rho)
            logt = sigma * (np.log(c) - np.log(p))
            t = np.exp(logt - logt.max())
            return wealth * t / float(p @ t)
        if self.family == "linear":
            # ties: lexicographically smallest optimal corner
            verts = linear_face_vertices(c, p, wealth)
            return np.array(min(tuple(v) for v in verts))
        return _water_fill(c, p, wealth)

    def face_vertices(self, p, wealth: float) -> np.ndarray:
        """Vertices of the demand set; a single row unless U is linear with ties."""
        if self.family == "linear" and wealth > 0.0:
            return linear_face_vertices(self.c, np.asarray(p, float), wealth)
        return self.demand(p, wealth)[None, :]


def linear_face_vertices(c: np.ndarray, p: np.ndarray, wealth: float) -> np.ndarray:
    ratio = c / p
    best = ratio.max()
    tied = np.flatnonzero(ratio >= best * (1.0 - TIE_RTOL))
    out = np.zeros((tied.size, p.size))
    out[np.arange(tied.size), tied] = wealth / p[tied]
    return out


def _water_fill(alpha: np.ndarray, p: np.ndarray, wealth: float) -> np.ndarray:
    # KKT: x_h = max(0, alpha_h / (lam p_h) - 1); fill goods by alpha/p, best first
    order = np.argsort(-(alpha / p), kind="stable")
    x = np.zeros_like(p)
    for k in range(1, p.size + 1):
        act = order[:k]
        inv_lam = (wealth + p[act].sum()) / alpha[act].sum()
        if k < p.size:
            nxt = order[k]
            if alpha[nxt] * inv_lam / p[nxt] > 1.0:
                continue
        x[act] = np.maximum(alpha[act] * inv_lam / p[act] - 1.0, 0.0)
        break
    # remove rounding drift so the budget binds exactly
    spent = float(p @ x)
    if spent > 0:
        x *= wealth / spent
    return x


def numeric_demand(u: UtilitySpec, p, wealth: float, max_iter: int = 10_000,
                   tol: float = 1e-10) -> tuple[np.ndarray, int, float]:
    """Projected-gradient ascent on the budget simplex.

    Works on budget shares ``s_h = p_h x_h / wealth`` so the feasible set is the
    unit simplex. Returns ``(x, iterations, last_step_norm)``.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    if wealth <= 0.0:
        return np.zeros(n), 0, 0.0
    scale = wealth / p
    s = np.full(n, 1.0 / n)

    def f(s):
        return float(u.values(s * scale))

    step = 1.0
    fs = f(s)
    delta = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = u.gradient(np.maximum(s * scale, 1e-300)) * scale
        g = g / max(np.abs(g).max(), 1e-300)
        while True:
            cand = project_simplex(s + step * g)
            fc = f(cand)
            if fc >= fs - 1e-15 or step < 1e-16:
                break
            step *= 0.5
        delta = float(np.abs(cand - s).max())
        s, fs = cand, fc
        step = min(step * 2.0, 1.0)
        if delta < tol:
            break
    return s * scale, it, delta


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{s >= 0, sum s = 1}`` (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    cond = u - css / k > 0
    r = k[cond][-1]
    theta = css[cond][-1] / r
    return np.maximum(v - theta, 0.0)
