"""Reference allocations and brute-force oracles for small instances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .model import Scenario, is_feasible, wsr


@dataclass(frozen=True)
class GridSpec:
    """Per-variable grid. Linear from ``lower`` to the mask by default;
    ``log_spaced`` uses geometric spacing (``lower`` must then be > 0 unless
    ``include_zero`` adds an explicit zero)."""

    points_per_var: int = 101
    include_zero: bool = True
    log_spaced: bool = False
    lower: float = 0.0

    def __post_init__(self):
        if self.points_per_var < 2:
            raise ValueError("points_per_var must be >= 2")

    def axis(self, upper: float) -> np.ndarray:
        if self.log_spaced:
            lo = self.lower if self.lower > 0 else upper * 1e-6
            pts = np.geomspace(lo, upper, self.points_per_var)
        else:
            pts = np.linspace(self.lower, upper, self.points_per_var)
        if self.include_zero and self.lower == 0.0:
            pts = np.union1d([0.0], pts)
        return pts


def upa(s: Scenario) -> np.ndarray:
    """Uniform power allocation, mask-clipped."""
    return np.minimum(s.p_total[:, None] / s.N, s.p_mask)


# --- exhaustive grid search ------------------------------------------------

GRID_VAR_CAP = 6


def _wsr_batch(s: Scenario, P):
    """WSR for a batch of power matrices ``P`` of shape (B, K, N)."""
    interf = s.noise[None] + np.einsum("kln,bln->bkn", s.cross, P)
    snr = s.direct[None] * P / interf
    return np.log1p(snr / s.gamma).sum(axis=2) @ s.weight


def grid_oracle(s: Scenario, grid: GridSpec, chunk: int = 1 << 20, refine: bool = False):
    """Best feasible point of a full tensor grid over every ``p_kn``.

    Ties go to the lexicographically smallest power vector. With
    ``refine=True`` the winner is polished by a local bounded solve, which
    never returns a worse point. Returns ``(p, wsr)``.
    """
    K, N = s.K, s.N
    if K * N > GRID_VAR_CAP:
        raise ValueError(f"grid oracle limited to K*N <= {GRID_VAR_CAP}, got {K * N}")
    upper = np.minimum(s.p_mask, s.p_total[:, None])
    axes = [grid.axis(upper[k, n]) for k in range(K) for n in range(N)]
    sizes = [a.size for a in axes]
    total = int(np.prod(sizes))

    best_val, best_p = -np.inf, None
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.unravel_index(flat, sizes)
        P = np.stack([axes[i][idx[i]] for i in range(K * N)], axis=1).reshape(-1, K, N)
        ok = np.all(P.sum(axis=2) <= s.p_total[None] * (1 + 1e-12), axis=1)
        if not np.any(ok):
            continue
        vals = np.where(ok, _wsr_batch(s, P), -np.inf)
        i = int(np.argmax(vals))  # first occurrence = lexicographically smallest
        if vals[i] > best_val:
            best_val, best_p = float(vals[i]), P[i].copy()
    if best_p is None:
        raise ValueError("no feasible grid point")
    if refine:
        best_p, best_val = polish(s, best_p, lower=grid.lower)
    return best_p, best_val


def polish(s: Scenario, p0, lower: float = 0.0):
    """Local bounded SLSQP refinement; returns the better of start and result."""
    K, N = s.K, s.N
    ub = np.minimum(s.p_mask, s.p_total[:, None]).ravel()
    bounds = [(lower, u) for u in ub]
    cons = [
        {"type": "ineq", "fun": (lambda x, k=k: s.p_total[k] - x.reshape(K, N)[k].sum())}
        for k in range(K)
    ]
    res = minimize(
        lambda x: -wsr(s, x.reshape(K, N)),
        np.asarray(p0, dtype=float).ravel(),
        method="SLSQP",
        bounds=bounds,
        constraints=cons,
        options={"ftol": 1e-14, "maxiter": 500},
    )
    p = np.clip(res.x.reshape(K, N), lower, ub.reshape(K, N))
    ok, _ = is_feasible(s, p, tol=1e-12)
    if ok and wsr(s, p) > wsr(s, p0):
        return p, wsr(s, p)
    return np.asarray(p0, dtype=float), wsr(s, p0)


# --- coordinate grid ascent (simplified ISB-style baseline) ----------------


def coordinate_grid_ascent(s: Scenario, grid: GridSpec, sweeps: int = 10, p_init=None):
    """Cyclic single-coordinate grid maximization.

    Each ``p_kn`` is chosen from a grid over ``[lower, min(mask, remaining
    budget)]`` plus its current value, with the others fixed. This is a
    simplified stand-in for per-tone iterative spectrum balancing; it is not
    the dual-decomposition algorithm.
    """
    p = upa(s) if p_init is None else np.array(p_init, dtype=float)
    current = wsr(s, p)
    for _ in range(sweeps):
        changed = False
        for k in range(s.K):
            for n in range(s.N):
                room = s.p_total[k] - (p[k].sum() - p[k, n])
                cap = min(s.p_mask[k, n], room)
                if cap < grid.lower:
                    continue
                cand = np.union1d(grid.axis(cap), [p[k, n]])
                cand = cand[cand <= cap * (1 + 1e-12)]
                P = np.repeat(p[None], cand.size, axis=0)
                P[:, k, n] = cand
                vals = _wsr_batch(s, P)
                i = int(np.argmax(vals))
                if vals[i] > current:
                    p[k, n] = cand[i]
                    current = float(vals[i])
                    changed = True
        if not changed:
            break
    return p


# --- single-user water filling ------------------------------------------------


def waterfilling_single_user(s: Scenario, k: int, tol: float = 1e-13) -> np.ndarray:
    """Interference-free optimum for link ``k``: ``clip(level - Gamma
    sigma2 / g, 0, mask)`` with the water level bisected onto the budget."""
    floor = s.gamma * s.noise[k] / s.direct[k]
    mask = s.p_mask[k]
    budget = s.p_total[k]
    if mask.sum() <= budget:
        return mask.copy()

    def fill(level):
        return np.clip(level - floor, 0.0, mask)

    lo, hi = 0.0, float(np.max(floor + mask))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fill(mid).sum() > budget:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    return fill(lo)


# --- two-user Pareto boundary ----------------------------------------------


def _require_two_user(s: Scenario):
    if s.K != 2 or s.N != 1:
        raise ValueError("two-user tracer needs K=2, N=1")


def _box(s: Scenario):
    return np.minimum(s.p_mask[:, 0], s.p_total)


def _phi_pairs(s: Scenario, p1, p2):
    g = s.gain[:, :, 0]
    n = s.noise[:, 0]
    phi1 = np.log(g[0, 0] * p1) - np.log(n[0] + g[0, 1] * p2)
    phi2 = np.log(g[1, 1] * p2) - np.log(n[1] + g[1, 0] * p1)
    return np.column_stack([phi1, phi2])


def power_for_logsinr_2user(s: Scenario, phi):
    """Powers achieving log-SINR targets ``phi`` (two users, one carrier).

    The SINR targets make the conditions linear in power, so this is a 2x2
    solve. Returns None when the targets are not achievable by any positive
    power (spectral-radius condition).
    """
    _require_two_user(s)
    g = s.gain[:, :, 0]
    n = s.noise[:, 0]
    gam = np.exp(np.asarray(phi, dtype=float))
    # p1 g11 - gam1 g12 p2 = gam1 n1 ;  -gam2 g21 p1 + p2 g22 = gam2 n2
    A = np.array([[g[0, 0], -gam[0] * g[0, 1]], [-gam[1] * g[1, 0], g[1, 1]]])
    det = np.linalg.det(A)
    if det <= 0:
        return None
    p = np.linalg.solve(A, gam * n)
    if np.any(p <= 0):
        return None
    return p


def in_region_2user(s: Scenario, phi, lower: float = 0.0, rtol: float = 1e-9) -> bool:
    """Whether ``phi`` is achievable with ``lower <= p <= box``.

    With ``lower = 0`` the region is downward closed, so any point below an
    achievable one is achievable; with ``lower > 0`` the exact image of the
    box is tested.
    """
    p = power_for_logsinr_2user(s, phi)
    if p is None:
        return False
    box = _box(s)
    if np.any(p > box * (1 + rtol)):
        return False
    return bool(np.all(p >= lower * (1 - rtol)))


def region_boundary_2user(s: Scenario, lower: float, samples: int = 2000):
    """Images of the four edges of the power box (upper edges first)."""
    _require_two_user(s)
    box = _box(s)
    lo = lower if lower > 0 else min(box) * 1e-12
    t1 = np.geomspace(lo, box[0], samples)
    t2 = np.geomspace(lo, box[1], samples)
    edges = {
        "p1_max": _phi_pairs(s, np.full(samples, box[0]), t2),
        "p2_max": _phi_pairs(s, t1, np.full(samples, box[1])),
    }
    if lower > 0:
        edges["p1_min"] = _phi_pairs(s, np.full(samples, lower), t2)
        edges["p2_min"] = _phi_pairs(s, t1, np.full(samples, lower))
    return edges


def pareto_filter(points: np.ndarray) -> np.ndarray:
    """Points not strictly dominated in both coordinates, sorted by phi1."""
    pts = np.asarray(points, dtype=float)
    order = np.argsort(-pts[:, 0], kind="stable")
    pts = pts[order]
    keep = np.zeros(len(pts), dtype=bool)
    best2 = -np.inf  # max phi2 over points with strictly larger phi1
    i = 0
    while i < len(pts):
        j = i
        while j < len(pts) and pts[j, 0] == pts[i, 0]:
            j += 1
        keep[i:j] = pts[i:j, 1] >= best2
        best2 = max(best2, pts[i:j, 1].max())
        i = j
    out = pts[keep]
    return out[np.argsort(out[:, 0], kind="stable")]


def trace_pob_2user(s: Scenario, lower: float = 0.0, samples: int = 2000) -> np.ndarray:
    """Pareto boundary of the achievable log-SINR region as an array of
    ``(phi1, phi2)`` rows ordered by ``phi1``.

    ``p1`` is swept over ``[lower, box]`` on a log grid; the boundary lies on
    the upper edges of the power box, whose images are filtered for
    dominance.
    """
    edges = region_boundary_2user(s, lower, samples)
    pts = np.vstack([edges["p1_max"], edges["p2_max"]])
    return pareto_filter(pts)


def in_region_2user_batch(s: Scenario, phi, lower: float = 0.0, rtol: float = 1e-9) -> np.ndarray:
    """Vectorized :func:`in_region_2user` over rows of ``phi``."""
    _require_two_user(s)
    g = s.gain[:, :, 0]
    n = s.noise[:, 0]
    gam = np.exp(np.asarray(phi, dtype=float))
    det = g[0, 0] * g[1, 1] - gam[:, 0] * gam[:, 1] * g[0, 1] * g[1, 0]
    ok = det > 0
    safe = np.where(ok, det, 1.0)
    # Cramer's rule on the same 2x2 system as power_for_logsinr_2user
    p1 = (gam[:, 0] * n[0] * g[1, 1] + gam[:, 0] * g[0, 1] * gam[:, 1] * n[1]) / safe
    p2 = (g[0, 0] * gam[:, 1] * n[1] + gam[:, 1] * g[1, 0] * gam[:, 0] * n[0]) / safe
    box = _box(s)
    ok &= (p1 > 0) & (p2 > 0)
    ok &= (p1 <= box[0] * (1 + rtol)) & (p2 <= box[1] * (1 + rtol))
    ok &= (p1 >= lower * (1 - rtol)) & (p2 >= lower * (1 - rtol))
    return ok


def chord_midpoint_failures(s: Scenario, points: np.ndarray, lower: float = 0.0,
                            max_pairs: int | None = None, rtol: float = 1e-9):
    """Chord midpoints between boundary points that fall outside the region.

    Returns the failing midpoints as an array (empty for a region consistent
    with convexity). Pairs are taken in lexicographic index order.
    """
    pts = np.asarray(points, dtype=float)
    i, j = np.triu_indices(len(pts), k=1)
    if max_pairs is not None:
        i, j = i[:max_pairs], j[:max_pairs]
    fails = []
    for start in range(0, i.size, 1 << 18):
        sl = slice(start, start + (1 << 18))
        mid = 0.5 * (pts[i[sl]] + pts[j[sl]])
        fails.append(mid[~in_region_2user_batch(s, mid, lower, rtol)])
    return np.vstack(fails) if fails else np.empty((0, 2))


def region_outline_2user(s: Scenario, lower: float = 0.0, samples: int = 2000) -> np.ndarray:
    """Pareto boundary plus, when ``lower > 0``, the lower edges where one
    power sits at the floor. The lower edges bound the region from below and
    are where a floor can make it nonconvex."""
    pts = [trace_pob_2user(s, lower, samples)]
    if lower > 0:
        edges = region_boundary_2user(s, lower, samples)
        pts += [edges["p1_min"], edges["p2_min"]]
    return np.vstack(pts)


def convexity_probe_2user(s: Scenario, lower: float = 0.0, samples: int = 400, rtol: float = 1e-9):
    """Chord-midpoint test over the region outline.

    Returns ``(looks_convex, failures)``; a single failing midpoint proves
    nonconvexity, while no failures is evidence (not proof) of convexity.
    """
    pts = region_outline_2user(s, lower, samples)
    fails = chord_midpoint_failures(s, pts, lower, rtol=rtol)
    return len(fails) == 0, fails
