"""Aggregate preferred set and its Hausdorff continuity in prices."""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from .config import DEFAULT, Config
from .correspondences import (
    SamplingBudgetError,
    grid_cells,
    sample_preferred_set,
    truncation_bound,
)
from .economy import Economy, PriceVector, as_price
from .setval import CompactSetApprox, aumann_integral, hausdorff_distance

log = logging.getLogger(__name__)


def aggregate_bound(E: Economy, s: int, p) -> np.ndarray:
    """Weighted sum of the agents' truncation corners."""
    total = np.zeros(E.goods)
    for i in range(E.n_agents):
        total = total + E.weights[i] * truncation_bound(E, i, s, p).upper
    return total


def aggregate_preferred_set(E: Economy, s: int, p, resolution: float,
                            cfg: Config = DEFAULT, mode: str = "auto") -> CompactSetApprox:
    """Aumann integral over agents of the sampled preferred sets C^X(., s, p).

    ``auto`` keeps the full grid clouds when every combination can be
    enumerated, and otherwise samples only hull-relevant grid points and sums
    the polytopes. ``window`` sums local clouds around each agent's demand set.
    """
    p = as_price(p)
    n = E.n_agents
    if mode == "auto":
        cells = [grid_cells(E, i, s, p, resolution) for i in range(n)]
        fits = all(c <= cfg.point_budget for c in cells) and math.prod(cells) <= cfg.combo_budget
        mode = "full" if fits else "hull"
    clouds = [sample_preferred_set(E, i, s, p, resolution, cfg, mode=mode) for i in range(n)]
    out = aumann_integral(clouds, E.weights, combo_budget=cfg.combo_budget,
                          n_selections=cfg.n_selections, seed=cfg.seed)
    bound = aggregate_bound(E, s, p)
    assert np.all(out.points <= bound * (1 + 1e-9) + 1e-12), "aggregate escaped its bounding box"
    return out


def continuity_probe(E: Economy, s: int, p_seq: Sequence, p, resolution: float,
                     cfg: Config = DEFAULT) -> list[float]:
    """Hausdorff distances H(agg(p_n), agg(p)) along a caller-supplied sequence.

    Sequence points outside the interior simplex are projected onto it the
    way the solver projects its iterates. A price whose preferred sets cannot
    be sampled within the configured budget (a coordinate near zero blows up
    the truncation box) yields ``inf``.
    """
    target = aggregate_preferred_set(E, s, p, resolution, cfg, mode="hull")
    out = []
    for k, pn in enumerate(p_seq):
        pn = np.asarray(pn, dtype=float)
        if pn.min() < cfg.p_min or abs(pn.sum() - 1.0) > 1e-12:
            log.warning("probe step %d: price %s projected onto the simplex", k, pn.tolist())
            pn = PriceVector.clamped(pn, cfg.p_min).p
        try:
            A = aggregate_preferred_set(E, s, pn, resolution, cfg, mode="hull")
        except SamplingBudgetError as exc:
            log.warning("probe step %d unresolvable at resolution %g: %s", k, resolution, exc)
            out.append(math.inf)
            continue
        out.append(hausdorff_distance(A, target))
    return out
