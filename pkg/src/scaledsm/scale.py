"""SCALE outer loop, surrogate evaluation and fixed-point diagnostics."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import gp as gp_mod
from . import lowcomplexity as lc
from .model import Scenario, interference_matrix, logsinr_of_power, wsr

log = logging.getLogger(__name__)


def alpha_update(s: Scenario, p) -> np.ndarray:
    """Surrogate coefficients ``w_k SINR / (Gamma + SINR)`` at power ``p``.

    Zero power gives a zero coefficient.
    """
    p = np.asarray(p, dtype=float)
    sig = s.direct * p
    return s.weight[:, None] * sig / (sig + s.gamma * interference_matrix(s, p))


def surrogate_value(s: Scenario, alpha, anchor, p) -> float:
    """Lower bound of the WSR built at ``anchor``, evaluated at ``p``."""
    phi_a = logsinr_of_power(s, anchor)
    phi_p = logsinr_of_power(s, p)
    return wsr(s, anchor) + float(np.sum(np.asarray(alpha) * (phi_p - phi_a)))


def kkt_residual(s: Scenario, p, alpha=None, mu_tol: float = 1e-12) -> float:
    """Largest violation of the clipped stationarity equations at ``p``.

    ``alpha`` defaults to the coefficients recomputed at ``p``; passing a fixed
    ``alpha`` checks optimality for that one surrogate instead. Residuals are
    reported relative to each transmitter's budget.
    """
    p = np.asarray(p, dtype=float)
    if alpha is None:
        alpha = alpha_update(s, p)
    price = lc.interference_prices(s, alpha, p)
    mu = lc._solve_mu(np.asarray(alpha, dtype=float), price, s.p_mask, s.p_total, mu_tol)
    target = lc._clipped(np.asarray(alpha, dtype=float), price, mu[:, None], s.p_mask)
    return float(np.max(np.abs(p - target) / s.p_total[:, None]))


# --- configuration --------------------------------------------------------


@dataclass
class LowComplexity:
    L: int = 8
    tol: float = 1e-9
    order: str = "jacobi"

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")


InnerSolver = Union[LowComplexity, gp_mod.GPConfig]

INIT_CHOICES = ("alpha_w", "upa", "mask")


@dataclass
class ScaleConfig:
    """Outer-loop settings.

    ``init`` is ``"alpha_w"`` (first surrogate uses ``alpha = w``, the
    high-SINR limit), ``"upa"``, ``"mask"`` or an explicit K x N power array.
    """

    max_outer: int = 8
    outer_tol: float = 1e-8
    inner: InnerSolver = field(default_factory=LowComplexity)
    init: object = "alpha_w"
    monotone_slack: float = 1e-9

    def __post_init__(self):
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.outer_tol < 0:
            raise ValueError("outer_tol must be nonnegative")
        if isinstance(self.init, str) and self.init not in INIT_CHOICES:
            raise ValueError(f"init must be one of {INIT_CHOICES} or a power array")


class MonotonicityError(RuntimeError):
    pass


class InnerSolveError(RuntimeError):
    def __init__(self, iteration, cause):
        super().__init__(f"inner solve failed at outer iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause


# --- trace ----------------------------------------------------------------


@dataclass
class IterationRecord:
    m: int
    power: np.ndarray
    phi: np.ndarray | None
    wsr: float
    alpha: np.ndarray
    inner_iterations: int
    kkt_residual: float
    wall_time: float


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    monotone_violations: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __iter__(self):
        return iter(self.records)

    @property
    def wsr(self) -> np.ndarray:
        return np.array([r.wsr for r in self.records])

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def power(self) -> np.ndarray:
        return self.records[-1].power

    def solver_iterations(self) -> list:
        """Records produced by an inner solve (excludes the initial point)."""
        return [r for r in self.records if r.m >= 1]

    def wsr_after(self, M: int) -> float:
        """WSR after ``M`` outer iterations; a run that stopped early keeps
        its last value."""
        recs = [r for r in self.records if r.m <= M]
        return recs[-1].wsr

    def to_csv(self, path, wide: bool = False):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_trace_csv(self, fh, wide=wide)


def write_trace_csv(trace: IterationTrace, fh, wide: bool = False):
    """Columns ``m, wsr, kkt_residual, inner_iters, wall_ms`` then, if
    ``wide``, ``p_k_n`` and ``phi_k_n`` for every entry."""
    w = csv.writer(fh)
    header = ["m", "wsr", "kkt_residual", "inner_iters", "wall_ms"]
    if wide and trace.records:
        K, N = trace.records[0].power.shape
        header += [f"p_{k}_{n}" for k in range(K) for n in range(N)]
        header += [f"phi_{k}_{n}" for k in range(K) for n in range(N)]
    w.writerow(header)
    for r in trace.records:
        row = [r.m, repr(r.wsr), repr(r.kkt_residual), r.inner_iterations, f"{1e3 * r.wall_time:.3f}"]
        if wide:
            row += [repr(float(v)) for v in r.power.ravel()]
            phi = r.phi if r.phi is not None else np.full(r.power.shape, -np.inf)
            row += [repr(float(v)) for v in phi.ravel()]
        w.writerow(row)


# --- main loop --------------------------------------------------------------


def _initial_power(s: Scenario, init):
    if isinstance(init, str):
        if init == "alpha_w":
            return None
        if init == "upa":
            return np.minimum(s.p_total[:, None] / s.N, s.p_mask)
        if init == "mask":
            # masks can exceed the budget; scale rows back into it
            p = np.array(s.p_mask, dtype=float)
            scale = np.minimum(1.0, s.p_total / p.sum(axis=1))
            return p * scale[:, None]
    p = np.array(init, dtype=float)
    if p.shape != (s.K, s.N):
        raise ValueError("initial power has the wrong shape")
    return p


def _record(s, m, p, inner_its, t0):
    phi = logsinr_of_power(s, p) if np.all(p > 0) else None
    return IterationRecord(
        m=m,
        power=p,
        phi=phi,
        wsr=wsr(s, p),
        alpha=alpha_update(s, p),
        inner_iterations=inner_its,
        kkt_residual=kkt_residual(s, p),
        wall_time=time.perf_counter() - t0,
    )


def run_scale(s: Scenario, cfg: ScaleConfig | None = None) -> IterationTrace:
    """Run SCALE and return every outer iterate.

    With ``init="alpha_w"`` the first surrogate uses ``alpha = w`` and the
    trace starts at ``m = 1``; with an initial power that power is recorded
    as ``m = 0``.
    """
    cfg = cfg or ScaleConfig()
    inner = cfg.inner
    use_gp = isinstance(inner, gp_mod.GPConfig)
    xi = inner.resolve_xi(s) if use_gp else None

    trace = IterationTrace()
    p_prev = _initial_power(s, cfg.init)
    if p_prev is None:
        alpha = np.broadcast_to(s.weight[:, None], (s.K, s.N)).copy()
        p_work = s.zeros()
    else:
        t0 = time.perf_counter()
        trace.records.append(_record(s, 0, p_prev, 0, t0))
        alpha = trace.records[-1].alpha
        p_work = p_prev
    floor = 1e-15 * float(np.max(s.p_total))

    for m in range(1, cfg.max_outer + 1):
        t0 = time.perf_counter()
        try:
            if use_gp:
                p_new, status = gp_mod.gp_inner_solve_with_status(s, alpha, inner, p_prev)
                its = status.newton_steps
                # An exact solver never returns a point worse than the anchor
                # for the surrogate; guard against barrier round-off.
                if p_prev is not None and np.all(p_prev >= xi * (1 - 1e-12)) and np.all(p_prev > 0):
                    if surrogate_value(s, alpha, p_prev, p_new) < wsr(s, p_prev):
                        p_new = p_prev.copy()
            else:
                p_new, its = lc.inner_solve(s, alpha, p_work, L=inner.L, tol=inner.tol, order=inner.order)
        except (gp_mod.GPSolverError, lc.BracketError) as exc:
            raise InnerSolveError(m, exc) from exc

        rec = _record(s, m, p_new, its, t0)
        if trace.records:
            drop = trace.records[-1].wsr - rec.wsr
            if drop > cfg.monotone_slack:
                anchor_ok = not use_gp or (p_prev is not None and np.all(p_prev >= xi * (1 - 1e-12)))
                if use_gp and anchor_ok:
                    raise MonotonicityError(f"WSR decreased by {drop:.3e} at outer iteration {m}")
                trace.monotone_violations.append((m, drop))
                log.info("WSR decreased by %.3e at outer iteration %d", drop, m)
        trace.records.append(rec)
        alpha = rec.alpha

        if p_prev is not None and lc.relative_change(p_new, p_prev, floor) <= cfg.outer_tol:
            trace.converged = True
            break
        p_prev = p_new
        p_work = p_new
    return trace
