"""Command line front end (``dsm``).

dB and dBm values appear only in JSON files handled by the generator and the
scenario loader; everything here works in linear units.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import baselines
from .experiment import ExperimentSpec, parse_method, parse_seeds, run_experiment, solve_one
from .generator import GeneratorParams, generate_scenario
from .gp import GPConfig, wsr_loss_bound, xi_from_epsilon
from .model import Scenario, logsinr_of_power, wsr
from .scale import LowComplexity, ScaleConfig, run_scale


def _solve(args) -> int:
    s = Scenario.from_json(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    method = args.method.lower()
    if method in ("gp", "lowcomplexity", "lc"):
        if method == "gp":
            inner = GPConfig(xi=args.xi, epsilon=args.epsilon)
        else:
            inner = LowComplexity(L=args.inner_l, order=args.order)
        trace = run_scale(s, ScaleConfig(max_outer=args.max_outer, inner=inner, init=args.init))
        trace.to_csv(out / "trace.csv", wide=True)
        p = trace.power
        if method == "gp":
            xi = inner.resolve_xi(s)
            print(f"xi = {xi:.6g}, WSR loss bound = {wsr_loss_bound(s, xi):.6g}")
    else:
        p, _, _, _ = solve_one(s, parse_method(method), args.max_outer)
    (out / "power.json").write_text(json.dumps({"power": p.tolist(), "wsr": wsr(s, p)}, indent=2), encoding="utf-8")
    print(f"WSR = {wsr(s, p):.10g}")
    return 0


def _bench(args) -> int:
    gen = GeneratorParams.from_json(args.generator) if args.generator else None
    spec = ExperimentSpec(
        methods=[m for m in args.methods.split(",") if m],
        out_dir=Path(args.out),
        M=args.max_outer,
        seeds=parse_seeds(args.seeds) if gen is not None else [],
        scenario_path=Path(args.scenario) if args.scenario else None,
        generator=gen,
        workers=args.workers,
    )
    report = run_experiment(spec)
    for method, m, mean, std, wall in report.summary:
        print(f"{method:>12} M={m:<3d} mean_wsr={mean:.6g} std={std:.4g} wall_ms={wall:.1f}")
    if report.errors:
        print(f"{len(report.errors)} run(s) failed; see {spec.out_dir / 'errors.log'}", file=sys.stderr)
        return 1
    return 0


def _write_phi(path: Path, pts: np.ndarray):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["phi1", "phi2"])
        w.writerows([[repr(float(a)), repr(float(b))] for a, b in pts])


def _pob(args) -> int:
    s = Scenario.from_json(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for lower, name in ((0.0, "pob.csv"), (args.xi, "pob_xi.csv")):
        _write_phi(out / name, baselines.trace_pob_2user(s, lower=lower, samples=args.samples))
        convex, fails = baselines.convexity_probe_2user(s, lower, samples=args.chord_points)
        shape = "no chord failures (consistent with convex)" if convex else f"{len(fails)} chord failures (nonconvex)"
        print(f"lower={lower:g}: {shape}")
    if args.xi > 0:
        edges = baselines.region_boundary_2user(s, args.xi, args.samples)
        for key in ("p1_min", "p2_min"):
            _write_phi(out / f"lower_edge_{key}.csv", edges[key])
    return 0


def _oracle(args) -> int:
    s = Scenario.from_json(args.scenario)
    grid = baselines.GridSpec(points_per_var=args.grid, lower=args.lower)
    p, val = baselines.grid_oracle(s, grid, refine=args.refine)
    print(f"WSR = {val:.10g}")
    print("power =", np.array2string(p, precision=6))
    if np.all(p > 0):
        print("phi =", np.array2string(logsinr_of_power(s, p), precision=4))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "oracle.json").write_text(json.dumps({"power": p.tolist(), "wsr": val}, indent=2), encoding="utf-8")
    return 0


def _generate(args) -> int:
    params = GeneratorParams.from_json(args.params) if args.params else GeneratorParams()
    s = generate_scenario(params, args.seed)
    s.to_json(args.out)
    eps_xi = xi_from_epsilon(s, 1e-6)
    print(f"wrote {args.out} (K={s.K}, N={s.N}, max gain {s.gain.max():.3g}, xi for 1e-6 loss {eps_xi:.3g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dsm", description="Weighted-sum-rate power allocation with SCALE.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one method on one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--method", default="lowcomplexity", help="gp, lowcomplexity, upa, coord")
    p.add_argument("--epsilon", type=float, help="tolerated WSR loss (gp); sets xi")
    p.add_argument("--xi", type=float, help="power floor (gp)")
    p.add_argument("--inner-l", type=int, default=8, help="fixed-point sweeps per outer iteration")
    p.add_argument("--order", default="jacobi", choices=["jacobi", "gauss-seidel"])
    p.add_argument("--init", default="alpha_w", choices=["alpha_w", "upa", "mask"])
    p.add_argument("--max-outer", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_solve)

    p = sub.add_parser("bench", help="many scenarios times many methods")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--generator", help="generator parameters JSON")
    src.add_argument("--scenario", help="single scenario JSON")
    p.add_argument("--seeds", default="1", help="e.g. 1..100 or 1,4,9")
    p.add_argument("--methods", default="gp,lc:1,lc:4,lc:16,upa")
    p.add_argument("--max-outer", type=int, default=8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_bench)

    p = sub.add_parser("pob", help="two-user Pareto boundary in log-SINR space")
    p.add_argument("--scenario", required=True)
    p.add_argument("--xi", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--chord-points", type=int, default=200, help="samples per edge in the chord tests")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_pob)

    p = sub.add_parser("oracle", help="exhaustive grid search (K*N <= 6)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--grid", type=int, default=2001, help="points per variable")
    p.add_argument("--lower", type=float, default=0.0, help="power floor")
    p.add_argument("--refine", action="store_true", help="polish the grid winner locally")
    p.add_argument("--out")
    p.set_defaults(func=_oracle)

    p = sub.add_parser("generate", help="write a random scenario JSON")
    p.add_argument("--params", help="generator parameters JSON (defaults if omitted)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_generate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
