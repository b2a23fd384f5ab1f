"""Numerical tolerances and budgets shared by every computation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Config:
    """Run configuration.

    Every report echoes the full config so that a certificate is
    self-describing. Defaults are the documented ones; override with
    ``dataclasses.replace`` or ``Config.with_overrides``.
    """

    tol_clear: float = 1e-8
    tol_budget: float = 1e-10
    tol_pref: float = 1e-9
    tol_price: float = 1e-7
    tol_dev: float = 1e-4
    tol_walras: float = 1e-9
    p_min: float = 1e-9
    resolution: float = 0.05
    grid_n: int = 50
    max_iter: int = 50_000
    step: float = 1.0
    demand_max_iter: int = 10_000
    demand_tol: float = 1e-10
    # stored points per sampled preferred set (full clouds)
    point_budget: int = 2_000_000
    # grid cells evaluated when only the hull-relevant column extremes are kept
    cell_budget: int = 60_000_000
    combo_budget: int = 1_000_000
    n_selections: int = 20_000
    window: int = 2
    seed: int = 0
    parallel: bool = False

    def with_overrides(self, **kwargs) -> "Config":
        clean = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **clean)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT = Config()
