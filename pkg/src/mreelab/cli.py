"""Command-line driver: ``mreelab <command> ECONOMY.json [flags]``.

Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage or
parse error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .aggregate import aggregate_preferred_set, continuity_probe
from .config import DEFAULT, Config
from .correspondences import SamplingBudgetError
from .economy import Economy, EconomyError, PriceError, PriceVector, validate_economy
from .maximin import PriceSystemError, compute_maximin_ree, solve_all_states, verify_maximin_ree
from .specfile import load_solution, parse_economy, solution_to_dict
from .walras import EquilibriumError

COMMANDS = ("validate", "solve", "ree", "verify", "aggregate-set", "probe-continuity")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    config: dict
    result: dict
    status: str  # "pass" | "fail" | "error"
    exit_code: int
    timing: dict = field(default_factory=dict)

    def numeric(self) -> dict:
        """Everything except timing; identical across reruns."""
        return {"command": self.command, "status": self.status, "config": self.config,
                "result": self.result}

    def to_json(self) -> str:
        return json.dumps({**self.numeric(), "timing": self.timing}, indent=2)

    def to_text(self) -> str:
        lines = [f"command: {self.command}", f"status:  {self.status}", "config:"]
        lines += [f"  {k} = {v}" for k, v in self.config.items()]
        lines.append("result:")
        lines += _text_lines(self.result, 1)
        lines += [f"timing: {self.timing.get('seconds', 0.0):.3f}s"]
        return "\n".join(lines)


def _text_lines(obj, depth: int) -> list[str]:
    pad = "  " * depth
    out = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _flat(v):
                out.append(f"{pad}{k}:")
                out += _text_lines(v, depth + 1)
            else:
                out.append(f"{pad}{k}: {_short(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and not _flat(v):
                out.append(f"{pad}-")
                out += _text_lines(v, depth + 1)
            else:
                out.append(f"{pad}- {_short(v)}")
    return out


def _flat(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _vector_arg(text: Optional[str], goods: int, name: str) -> Optional[np.ndarray]:
    if text is None:
        return None
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if v.size != goods:
        raise UsageError(f"{name}: expected {goods} entries, got {v.size}")
    return v


def _state_arg(E: Economy, sid: Optional[str]) -> int:
    if sid is None:
        if E.n_states == 1:
            return 0
        raise UsageError("--state is required when the economy has several states")
    for k, s in enumerate(E.state_space.states):
        if str(s) == sid:
            return k
    raise UsageError(f"unknown state id {sid!r}")


def _price_arg(E: Economy, s: int, text: Optional[str], cfg: Config) -> np.ndarray:
    p = _vector_arg(text, E.goods, "--price")
    if p is None:
        return solve_all_states(_single_state(E, s), cfg)[0].price.p
    try:
        return PriceVector(p, cfg.p_min).p
    except PriceError as exc:
        raise UsageError(f"--price: {exc}") from None


def _single_state(E: Economy, s: int) -> Economy:
    from .economy import make_economy

    return make_economy(E.goods, [1.0], E.weights, [(E.utility(i, s),) for i in range(E.n_agents)],
                        E.endowment[:, s:s + 1, :])


def run_command(cmd: str, spec: str, cfg: Config = DEFAULT, *, solution: Optional[str] = None,
                out: Optional[str] = None, state: Optional[str] = None,
                price: Optional[str] = None, direction: Optional[str] = None,
                steps: int = 12, mode: str = "auto") -> RunReport:
    """Run one command on the economy in ``spec`` and return its report."""
    if cmd not in COMMANDS:
        raise UsageError(f"unknown command {cmd!r}; choose from {', '.join(COMMANDS)}")
    start = time.perf_counter()
    conf = cfg.to_dict()
    if cmd == "validate":
        E = parse_economy(spec, validate=False)
        rep = validate_economy(E)
        res = rep.to_dict()
        status = "pass" if rep.ok else "fail"
    else:
        E = parse_economy(spec)
        res, status = _dispatch(cmd, E, cfg, solution, out, state, price, direction, steps, mode)
    code = EXIT_OK if status == "pass" else EXIT_FAIL
    return RunReport(cmd, conf, res, status, code, {"seconds": time.perf_counter() - start})


def _dispatch(cmd, E, cfg, solution, out, state, price, direction, steps, mode):
    sid = E.state_space.states
    if cmd == "solve":
        eqs = solve_all_states(E, cfg)
        return {"equilibria": [eq.to_dict(E) for eq in eqs]}, "pass"
    if cmd == "ree":
        f, pi, cert, eqs = compute_maximin_ree(E, cfg)
        if out:
            Path(out).write_text(json.dumps(solution_to_dict(E, f, pi), indent=2))
        res = {"equilibria": [eq.to_dict(E) for eq in eqs], "certificate": cert.to_dict(E)}
        return res, cert.verdict
    if cmd == "verify":
        if not solution:
            raise UsageError("verify needs --solution FILE")
        f, pi = load_solution(E, solution, cfg.p_min)
        cert = verify_maximin_ree(E, f, pi, cfg)
        return {"certificate": cert.to_dict(E)}, cert.verdict
    s = _state_arg(E, state)
    p = _price_arg(E, s, price, cfg)
    if cmd == "aggregate-set":
        A = aggregate_preferred_set(E, s, p, cfg.resolution, cfg, mode=mode)
        return {"state": sid[s], "price": p.tolist(), "resolution": cfg.resolution,
                "method": A.method, "n_points": len(A), "points": A.points.tolist()}, "pass"
    d = _vector_arg(direction, E.goods, "--direction")
    if d is None:
        d = np.zeros(E.goods)
        if E.goods > 1:
            d[0], d[1] = 1.0, -1.0
    seq = [p + 2.0 ** (-n) * d for n in range(1, steps + 1)]
    dist = continuity_probe(E, s, seq, p, cfg.resolution, cfg)
    return {"state": sid[s], "price": p.tolist(), "direction": d.tolist(),
            "resolution": cfg.resolution, "distances": dist}, "pass"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mreelab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("spec", help="economy file (JSON)")
    ap.add_argument("--tol-clear", type=float)
    ap.add_argument("--tol-budget", type=float)
    ap.add_argument("--tol-pref", type=float)
    ap.add_argument("--tol-price", type=float)
    ap.add_argument("--tol-dev", type=float)
    ap.add_argument("--resolution", type=float)
    ap.add_argument("--grid-n", type=int)
    ap.add_argument("--max-iter", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--format", choices=("json", "text"), default="json")
    ap.add_argument("--parallel", choices=("on", "off"), default="off")
    ap.add_argument("--solution", help="allocation/price file for verify")
    ap.add_argument("--out", help="write the ree solution to this file")
    ap.add_argument("--state", help="state id for aggregate-set and probe-continuity")
    ap.add_argument("--price", help="comma-separated price (default: the state's equilibrium)")
    ap.add_argument("--direction", help="probe direction d in p + 2^-n d (default e1 - e2)")
    ap.add_argument("--steps", type=int, default=12, help="probe length")
    ap.add_argument("--mode", choices=("auto", "full", "hull", "window"), default="auto",
                    help="sampling mode for aggregate-set")
    return ap


def config_from_args(args) -> Config:
    return DEFAULT.with_overrides(
        tol_clear=args.tol_clear, tol_budget=args.tol_budget, tol_pref=args.tol_pref,
        tol_price=args.tol_price, tol_dev=args.tol_dev, resolution=args.resolution,
        grid_n=args.grid_n, max_iter=args.max_iter, seed=args.seed,
        parallel=args.parallel == "on",
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        rep = run_command(args.command, args.spec, cfg, solution=args.solution, out=args.out,
                          state=args.state, price=args.price, direction=args.direction,
                          steps=args.steps, mode=args.mode)
    except (UsageError, EconomyError, OSError, SamplingBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EquilibriumError, PriceSystemError) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    print(rep.to_json() if args.format == "json" else rep.to_text())
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
