"""Batch experiments: many scenarios times many methods, written to CSV.

Output layout under the experiment directory::

    runs/<scenario>__<method>.csv   per-iteration trace (SCALE methods) or a
                                    single row (one-shot baselines)
    final.csv                       scenario, method, wsr, wall_ms, iterations
    summary.csv                     method, M, mean_wsr, std_wsr, mean_wall_ms
    errors.log                      one line per failed run (empty on success)

Every column except the wall-clock ones is a deterministic function of the
experiment description.
"""

from __future__ import annotations

import csv
import logging
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .generator import GeneratorParams, generate_scenario
from .gp import GPConfig
from .model import Scenario, is_feasible, wsr
from .scale import IterationTrace, LowComplexity, ScaleConfig, run_scale, write_trace_csv

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class Method:
    """One solver configuration.

    ``kind`` is ``gp``, ``lc`` (low-complexity SCALE), ``upa``, ``coord``
    (coordinate grid ascent) or ``grid`` (exhaustive oracle, tiny cases).
    """

    kind: str
    L: int = 8
    xi: float | None = None
    epsilon: float | None = None
    grid_points: int = 101
    sweeps: int = 10

    @property
    def label(self) -> str:
        if self.kind == "lc":
            return f"lc:{self.L}"
        if self.kind == "gp":
            if self.epsilon is not None:
                return f"gp:eps={self.epsilon:g}"
            return "gp" if self.xi is None else f"gp:{self.xi:g}"
        if self.kind in ("coord", "grid"):
            return f"{self.kind}:{self.grid_points}"
        return self.kind

    @property
    def iterative(self) -> bool:
        return self.kind in ("gp", "lc")


_METHOD_RE = re.compile(r"^(?P<kind>[a-z]+)(?::(?P<arg>.+))?$")


def parse_method(text: str) -> Method:
    """``gp``, ``gp:1e-10`` (xi), ``gp:eps=1e-6``, ``lc:4``, ``upa``,
    ``coord``, ``coord:51``, ``grid:201``. ``lowcomplexity`` aliases ``lc``."""
    m = _METHOD_RE.match(text.strip().lower())
    if not m:
        raise ValueError(f"cannot parse method {text!r}")
    kind, arg = m["kind"], m["arg"]
    if kind == "lowcomplexity":
        kind = "lc"
    if kind == "lc":
        return Method("lc", L=int(arg) if arg else 8)
    if kind == "gp":
        if arg is None:
            return Method("gp")
        if arg.startswith("eps="):
            return Method("gp", epsilon=float(arg[4:]))
        return Method("gp", xi=float(arg))
    if kind in ("coord", "grid"):
        return Method(kind, grid_points=int(arg) if arg else 101)
    if kind == "upa" and arg is None:
        return Method("upa")
    raise ValueError(f"unknown method {text!r}")


def parse_seeds(text: str) -> list:
    """``"1..100"`` (inclusive range), ``"3"`` or ``"1,5,9"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


@dataclass
class ExperimentSpec:
    """Scenarios come from ``scenario_path`` (one JSON file) or from
    ``generator`` with one scenario per seed."""

    methods: list
    out_dir: Path
    M: int = 8
    seeds: list = field(default_factory=list)
    scenario_path: Path | None = None
    generator: GeneratorParams | None = None
    workers: int = 1

    def __post_init__(self):
        self.methods = [parse_method(m) if isinstance(m, str) else m for m in self.methods]
        self.out_dir = Path(self.out_dir)
        if not self.methods:
            raise ValueError("need at least one method")
        if (self.scenario_path is None) == (self.generator is None):
            raise ValueError("give exactly one of scenario_path and generator")
        if self.generator is not None and not self.seeds:
            raise ValueError("generator mode needs at least one seed")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate methods")

    def scenarios(self):
        """Yields ``(label, scenario)`` in a fixed order."""
        if self.scenario_path is not None:
            s = Scenario.from_json(self.scenario_path)
            yield (s.name or Path(self.scenario_path).stem), s
        else:
            for seed in self.seeds:
                yield f"seed{seed}", generate_scenario(self.generator, seed)


@dataclass
class RunResult:
    scenario: str
    method: str
    wsr_by_m: list  # WSR after m = 1..M outer iterations (one entry for baselines)
    wall_by_m: list  # cumulative seconds
    power: np.ndarray | None = None
    trace_rows: list = field(default_factory=list)
    error: str | None = None

    @property
    def final_wsr(self) -> float:
        return self.wsr_by_m[-1] if self.wsr_by_m else float("nan")


def solve_one(s: Scenario, method: Method, M: int):
    """Run one method on one scenario. Returns ``(power, trace or None,
    wsr_by_m, wall_by_m)``."""
    t0 = time.perf_counter()
    if method.iterative:
        inner = GPConfig(xi=method.xi, epsilon=method.epsilon) if method.kind == "gp" else LowComplexity(L=method.L)
        trace = run_scale(s, ScaleConfig(max_outer=M, inner=inner))
        per_iter = np.cumsum([r.wall_time for r in trace.solver_iterations()])
        w, wall = [], []
        for m in range(1, M + 1):
            w.append(trace.wsr_after(m))
            done = [i for i, r in enumerate(trace.solver_iterations()) if r.m <= m]
            wall.append(float(per_iter[done[-1]]) if done else 0.0)
        return trace.power, trace, w, wall
    if method.kind == "upa":
        p = baselines.upa(s)
    elif method.kind == "coord":
        p = baselines.coordinate_grid_ascent(s, baselines.GridSpec(points_per_var=method.grid_points), method.sweeps)
    elif method.kind == "grid":
        p, _ = baselines.grid_oracle(s, baselines.GridSpec(points_per_var=method.grid_points))
    else:
        raise ValueError(f"unknown method kind {method.kind!r}")
    return p, None, [wsr(s, p)], [time.perf_counter() - t0]


def _run_task(task):
    label, s, method, M = task
    try:
        p, trace, w, wall = solve_one(s, method, M)
        ok, viol = is_feasible(s, p, tol=FEASIBILITY_TOL)
        if not ok:
            raise RuntimeError(f"infeasible output: {viol[0]}")
        return RunResult(label, method.label, w, wall, p, trace.records if trace else [])
    except Exception as exc:  # recorded, not raised: other runs keep going
        return RunResult(label, method.label, [], [], error=f"{type(exc).__name__}: {exc}")


def _file_label(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]", "_", text)


def _write_run(path: Path, res: RunResult):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if res.trace_rows:
            write_trace_csv(IterationTrace(records=res.trace_rows), fh)
        else:
            w = csv.writer(fh)
            w.writerow(["m", "wsr", "kkt_residual", "inner_iters", "wall_ms"])
            w.writerow([0, repr(res.final_wsr), "", 0, f"{1e3 * res.wall_by_m[-1]:.3f}"])


def summarize(results: list, methods: list, M: int) -> list:
    """Rows ``(method, M, mean_wsr, std_wsr, mean_wall_ms)``.

    SCALE methods get one row per M = 1..M; one-shot baselines a single row
    with M = 0. Failed runs are left out of the averages.
    """
    rows = []
    for method in methods:
        ok = [r for r in results if r.method == method.label and r.error is None]
        if not ok:
            continue
        W = np.array([r.wsr_by_m for r in ok])
        T = np.array([r.wall_by_m for r in ok])
        ms = range(1, M + 1) if method.iterative else [0]
        for j, m in enumerate(ms):
            col = W[:, j]
            std = float(np.std(col, ddof=1)) if len(col) > 1 else 0.0
            rows.append((method.label, m, float(np.mean(col)), std, float(1e3 * np.mean(T[:, j]))))
    return rows


@dataclass
class ExperimentReport:
    results: list
    summary: list
    out_dir: Path

    @property
    def errors(self) -> list:
        return [r for r in self.results if r.error is not None]

    def mean_wsr(self, method: str, M: int) -> float:
        for row in self.summary:
            if row[0] == method and row[1] == M:
                return row[2]
        raise KeyError((method, M))


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Run every (scenario, method) pair and write the report files.

    Runs fan out over ``spec.workers`` processes; results are collected in
    (scenario, method) order so the files do not depend on scheduling.
    """
    out = spec.out_dir
    (out / "runs").mkdir(parents=True, exist_ok=True)
    tasks = [(label, s, m, spec.M) for label, s in spec.scenarios() for m in spec.methods]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    with open(out / "errors.log", "w", encoding="utf-8") as fh:
        for r in results:
            if r.error is not None:
                fh.write(f"{r.scenario}\t{r.method}\t{r.error}\n")
                log.error("%s / %s failed: %s", r.scenario, r.method, r.error)

    with open(out / "final.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "method", "wsr", "wall_ms", "iterations"])
        for r in results:
            if r.error is None:
                _write_run(out / "runs" / f"{_file_label(r.scenario)}__{_file_label(r.method)}.csv", r)
                iters = len([x for x in r.trace_rows if x.m >= 1])
                w.writerow([r.scenario, r.method, repr(r.final_wsr), f"{1e3 * r.wall_by_m[-1]:.3f}", iters])

    summary = summarize(results, spec.methods, spec.M)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "M", "mean_wsr", "std_wsr", "mean_wall_ms"])
        for method, m, mean, std, wall in summary:
            w.writerow([method, m, repr(mean), repr(std), f"{wall:.3f}"])
    return ExperimentReport(results, summary, out)
