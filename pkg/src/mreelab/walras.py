"""Per-state Walrasian equilibria of the complete-information economies E(s)."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .config import DEFAULT, Config
from .correspondences import SamplingBudgetError, demand, demand_face, preferred_membership
from .economy import Economy, PriceVector, as_price
from .aggregate import aggregate_preferred_set
from .setval import aumann_integral, dist_to_set
from .utility import UtilitySpec
from .correspondences import sample_preferred_set

log = logging.getLogger(__name__)


class EquilibriumError(RuntimeError):
    """Solver failure; carries the best iterate for diagnosis or a retry."""

    def __init__(self, message: str, state: int, best_price=None, best_residual=float("nan")):
        self.state = state
        self.best_price = best_price
        self.best_residual = best_residual
        super().__init__(f"state {state}: {message} (best residual {best_residual:.3e})")


@dataclass(frozen=True, eq=False)
class StateEquilibrium:
    state: int
    price: PriceVector
    allocation: np.ndarray  # (n_agents, goods)
    clearing_residual: np.ndarray
    iterations: int
    method: str
    trajectory_hash: str

    @property
    def residual_norm(self) -> float:
        return float(np.abs(self.clearing_residual).max())

    def to_dict(self, E: Optional[Economy] = None) -> dict:
        sid = E.state_space.states[self.state] if E is not None else self.state
        return {
            "state": sid,
            "price": self.price.p.tolist(),
            "allocation": self.allocation.tolist(),
            "clearing_residual": self.clearing_residual.tolist(),
            "iterations": self.iterations,
            "method": self.method,
            "trajectory_hash": self.trajectory_hash,
        }


def clearing_residual(E: Economy, s: int, bundles) -> np.ndarray:
    """sum_i mu_i (x_i - a_i), reduced in agent order."""
    bundles = np.asarray(bundles, dtype=float)
    z = np.zeros(E.goods)
    for i in range(E.n_agents):
        z = z + E.weights[i] * (bundles[i] - E.endowment[i, s])
    return z


def excess_demand(E: Economy, s: int, p, cfg: Config = DEFAULT) -> np.ndarray:
    p = as_price(p)
    return clearing_residual(E, s, [demand(E, i, s, p, cfg) for i in range(E.n_agents)])


def _project(q: np.ndarray, p_min: float) -> np.ndarray:
    return PriceVector.clamped(q, p_min).p


def _newton_polish(E, s, p, cfg, max_steps=40):
    """Newton on the first l-1 excess demands, last price by normalisation."""
    l = E.goods

    def F(q):
        full = np.append(q, 1.0 - q.sum())
        return excess_demand(E, s, full, cfg)

    q = p[:-1].copy()
    z = F(q)
    r = np.abs(z).max()
    for _ in range(max_steps):
        if r <= cfg.tol_clear * 1e-3:
            break
        h = 1e-7
        J = np.empty((l - 1, l - 1))
        for k in range(l - 1):
            e = np.zeros(l - 1)
            e[k] = h
            J[:, k] = (F(q + e)[:-1] - F(q - e)[:-1]) / (2 * h)
        try:
            dq = np.linalg.solve(J, -z[:-1])
        except np.linalg.LinAlgError:
            break
        t = 1.0
        improved = False
        while t > 1e-6:
            cand = q + t * dq
            if cand.min() > cfg.p_min and cand.sum() < 1.0 - cfg.p_min:
                zc = F(cand)
                rc = np.abs(zc).max()
                if rc < r:
                    q, z, r = cand, zc, rc
                    improved = True
                    break
            t *= 0.5
        if not improved:
            break
    return np.append(q, 1.0 - q.sum()), r


# relative bang-per-buck gaps below which a linear agent's goods count as tied
KAPPAS = (1e-9, 1e-7, 1e-5, 1e-3, 1e-2, 3e-2, 1e-1)


def _face_completion(E: Economy, s: int, p_hat: np.ndarray, cfg: Config):
    """Clear markets by splitting indifferent linear agents across their faces.

    With linear utilities the point-valued excess demand jumps at the
    equilibrium price, so no selection of it clears. Near the tâtonnement's
    best price, fix each linear agent's set of tied goods and solve prices
    (tie equalities) and face bundles (budgets, clearing) jointly.
    """
    n, l = E.n_agents, E.goods
    T = E.aggregate_endowment(s)
    for kappa in KAPPAS:
        tied, single = {}, {}
        for i in range(n):
            u = E.utility(i, s)
            if u.family != "linear":
                continue
            ratio = u.c / p_hat
            S = np.flatnonzero(ratio >= ratio.max() * (1.0 - kappa))
            if S.size >= 2:
                tied[i] = S
            else:
                # held on its best good so its demand stays smooth in p
                single[i] = int(S[0])
        if not tied:
            continue
        order = sorted(tied)
        sizes = [tied[i].size for i in order]

        def unpack(v):
            p = v[:l]
            ys, k = {}, l
            for i, m in zip(order, sizes):
                ys[i] = v[k:k + m]
                k += m
            return p, ys

        def resid(v):
            p, ys = unpack(v)
            out = [np.array([p.sum() - 1.0])]
            z = -T.copy()
            for i in range(n):
                if i in ys:
                    c = E.utility(i, s).c
                    S = tied[i]
                    h0 = S[0]
                    out.append((c[h0] * p[S[1:]] - c[S[1:]] * p[h0]) / c.max())
                    out.append(np.array([p[S] @ ys[i] - p @ E.endowment[i, s]]))
                    x = np.zeros(l)
                    x[S] = ys[i]
                elif i in single:
                    h = single[i]
                    x = np.zeros(l)
                    x[h] = (p @ E.endowment[i, s]) / p[h]
                else:
                    x = demand(E, i, s, p / p.sum(), cfg)
                z = z + E.weights[i] * x
            out.append(z)
            return np.concatenate(out)

        v0 = [p_hat]
        for i in order:
            S = tied[i]
            w = p_hat @ E.endowment[i, s]
            v0.append(np.full(S.size, w / S.size) / p_hat[S])
        v0 = np.concatenate(v0)
        lb = np.concatenate([np.full(l, cfg.p_min), np.zeros(v0.size - l)])
        ub = np.concatenate([np.ones(l), np.full(v0.size - l, np.inf)])
        try:
            sol = least_squares(resid, np.clip(v0, lb, ub), bounds=(lb, ub),
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        except ValueError:
            continue
        p, ys = unpack(sol.x)
        p = p / p.sum()
        alloc = np.array([demand(E, i, s, p, cfg) for i in range(n)])
        for i in order:
            x = np.zeros(l)
            x[tied[i]] = ys[i]
            # fold rounding into the budget so it binds exactly at p
            spent = p @ x
            if spent > 0:
                x *= (p @ E.endowment[i, s]) / spent
            alloc[i] = x
        z = clearing_residual(E, s, alloc)
        if np.abs(z).max() > cfg.tol_clear:
            continue
        if not all(preferred_membership(E, i, s, p, alloc[i], cfg) for i in order):
            continue
        return p, alloc, z, kappa
    return None


# iterations without a 1% gain in the best residual before giving up
STALL_ITERS = 300


def _tatonnement(E: Economy, s: int, cfg: Config, p0: np.ndarray, hasher):
    T = E.aggregate_endowment(s)
    lam0 = lam = cfg.step / max(float(T.max()), 1e-12)
    p = p0.copy()
    z = excess_demand(E, s, p, cfg)
    r = float(np.abs(z).max())
    best_p, best_r = p.copy(), r
    it = 0
    polished = False
    last_gain = 0
    for it in range(1, cfg.max_iter + 1):
        if r <= cfg.tol_clear:
            break
        if r < 1e-4 and not polished:
            polished = True
            pp, rp = _newton_polish(E, s, p, cfg)
            if rp < r:
                p, r = pp, rp
                z = excess_demand(E, s, p, cfg)
                hasher.update(p.tobytes())
                if r < best_r:
                    best_p, best_r = p.copy(), r
                if r <= cfg.tol_clear:
                    break
        # never let a single step cut a price by more than half
        neg = z < 0
        cap = 0.5 * float((p[neg] / -z[neg]).min()) if neg.any() else np.inf
        q = _project(p + min(lam, cap) * z, cfg.p_min)
        zq = excess_demand(E, s, q, cfg)
        rq = float(np.abs(zq).max())
        if rq > r:
            lam *= 0.5
            polished = False
        else:
            lam = min(lam * 1.2, lam0)
        p, z, r = q, zq, rq
        hasher.update(p.tobytes())
        if r < 0.99 * best_r:
            last_gain = it
        if r < best_r:
            best_p, best_r = p.copy(), r
        if lam < 1e-16 * max(1.0, 1.0 / max(r, 1e-300)):
            break
        if it - last_gain > STALL_ITERS:
            break
    return best_p, best_r, it


def _solve_direct(E: Economy, s: int, cfg: Config, p0: np.ndarray):
    hasher = hashlib.sha256()
    p, r, iters = _tatonnement(E, s, cfg, p0, hasher)
    n = E.n_agents
    if r <= cfg.tol_clear:
        alloc = np.array([demand(E, i, s, p, cfg) for i in range(n)])
        return p, alloc, iters, "tatonnement", hasher.hexdigest()
    done = _face_completion(E, s, p, cfg)
    if done is not None:
        pf, alloc, _, kappa = done
        hasher.update(pf.tobytes())
        return pf, alloc, iters, f"tatonnement+faces(kappa={kappa:g})", hasher.hexdigest()
    if any(E.utility(i, s).family == "linear" for i in range(n)):
        ps, extra = _smoothed_price(E, s, cfg, p0, hasher)
        done = _face_completion(E, s, ps, cfg)
        if done is not None:
            pf, alloc, _, kappa = done
            hasher.update(pf.tobytes())
            return (pf, alloc, iters + extra, f"smoothing+faces(kappa={kappa:g})",
                    hasher.hexdigest())
    raise EquilibriumError("tâtonnement did not clear markets", s, p, r)


SMOOTHING_SIGMAS = (2.0, 8.0, 32.0, 128.0, 512.0, 2048.0)


def _smoothed_price(E: Economy, s: int, cfg: Config, p0: np.ndarray, hasher):
    """Track equilibria of economies whose linear agents become CES with rising sigma.

    CES demand is continuous in p and tends to the linear corner demand as
    sigma = 1/(1 - rho) grows, so the path ends near a price at which the
    linear agents' tie sets are the equilibrium ones.
    """
    p, total = p0.copy(), 0
    sub = replace(cfg, max_iter=min(cfg.max_iter, 5_000))
    for sigma in SMOOTHING_SIGMAS:
        rows = []
        for i in range(E.n_agents):
            row = list(E.utilities[i])
            u = row[s]
            if u.family == "linear":
                row[s] = UtilitySpec("ces", u.coef, rho=1.0 - 1.0 / sigma)
            rows.append(tuple(row))
        E_k = replace(E, utilities=tuple(rows))
        q, r = _newton_polish(E_k, s, p, sub)
        if r > cfg.tol_clear:
            q, r, it = _tatonnement(E_k, s, sub, p, hasher)
            total += it
        else:
            hasher.update(q.tobytes())
        if r > cfg.tol_clear:
            break
        p = q
    return p, total


def _solve_homotopy(E: Economy, s: int, cfg: Config, steps: int = 16):
    """Deform endowments from demand-at-uniform-price to the true ones.

    At tau = 0 each agent already holds its demand at the uniform price, so
    that price is an equilibrium; each later stage warm-starts from the last.
    """
    l = E.goods
    u0 = np.full(l, 1.0 / l)
    start = np.array([demand(E, i, s, u0, cfg) for i in range(E.n_agents)])
    p = u0
    result = None
    for tau in np.linspace(0.0, 1.0, steps + 1)[1:]:
        a_tau = E.endowment.copy()
        a_tau[:, s, :] = (1 - tau) * start + tau * E.endowment[:, s, :]
        E_tau = replace(E, endowment=a_tau)
        result = _solve_direct(E_tau, s, cfg, p)
        p = result[0]
    return result


def solve_state_equilibrium(E: Economy, s: int, cfg: Config = DEFAULT,
                            homotopy: bool = False) -> StateEquilibrium:
    """Deterministic equilibrium search for state ``s``.

    Damped tâtonnement ``p <- normalize(clamp(p + lam z(p), p_min))`` from the
    uniform price, halving ``lam`` whenever the residual grows, with a Newton
    polish once the residual is small. Linear agents that end up indifferent
    get their bundles split across the optimal face. If that fails, or when
    ``homotopy`` is set, an endowment homotopy from the uniform price is run.
    """
    l = E.goods
    if l == 1:
        p = np.ones(1)
        alloc = np.array([demand(E, i, s, p, cfg) for i in range(E.n_agents)])
        z = clearing_residual(E, s, alloc)
        h = hashlib.sha256(p.tobytes()).hexdigest()
        return StateEquilibrium(s, PriceVector(p, cfg.p_min), alloc, z, 0, "single-good", h)
    p0 = np.full(l, 1.0 / l)
    try:
        if homotopy:
            raise EquilibriumError("homotopy requested", s)
        p, alloc, iters, method, h = _solve_direct(E, s, cfg, p0)
    except EquilibriumError as first:
        try:
            p, alloc, iters, method, h = _solve_homotopy(E, s, cfg)
            method = "homotopy/" + method
        except EquilibriumError:
            if homotopy:
                raise
            raise first
    z = clearing_residual(E, s, alloc)
    price = PriceVector.clamped(p, cfg.p_min)
    if not np.array_equal(price.p, p):
        p = price.p
    return StateEquilibrium(s, price, alloc, z, iters, method, h)


def aggregate_excess_certificate(E: Economy, s: int, p, resolution: float,
                                 cfg: Config = DEFAULT, mode: str = "auto",
                                 return_method: bool = False):
    """Distance from 0 to Z(s, p) = agg. preferred set - aggregate endowment.

    ``auto`` uses the full aggregate while every agent's grid fits
    ``cfg.point_budget`` and otherwise local windows around each agent's
    demand-set vertices. A window cloud is a subset of the full cloud, so the
    windowed value is an upper bound on the full-grid distance.
    """
    p = as_price(p)
    T = E.aggregate_endowment(s)
    A = None
    method = mode
    if mode in ("auto", "full", "hull"):
        try:
            A = aggregate_preferred_set(
                E, s, p, resolution, replace(cfg, cell_budget=min(cfg.cell_budget, cfg.point_budget)),
                mode="auto" if mode == "auto" else mode,
            )
            method = A.method
        except SamplingBudgetError:
            if mode != "auto":
                raise
    if A is None:
        clouds = [sample_preferred_set(E, i, s, p, resolution, cfg, mode="window",
                                       anchors=demand_face(E, i, s, p))
                  for i in range(E.n_agents)]
        A = aumann_integral(clouds, E.weights, combo_budget=cfg.combo_budget,
                            n_selections=cfg.n_selections, seed=cfg.seed)
        method = "window/" + A.method
    d = dist_to_set(T, A)
    return (d, method) if return_method else d
