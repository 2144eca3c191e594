"""Fixed-point / bisection inner solver for the per-iteration concave problem.

The update is the KKT stationarity condition of the log-power surrogate,

    p_kn <- clip(alpha_kn / (mu_k + price_kn), 0, mask_kn),
    price_kn = sum_{l != k} alpha_ln g_lkn / I_ln(p),

with each ``mu_k`` set to zero when the budget is slack and found by bisection
otherwise.
"""

from __future__ import annotations

import numpy as np

from .model import Scenario, interference_matrix


class BracketError(RuntimeError):
    """Bisection could not bracket the sum-power multiplier."""


MAX_DOUBLINGS = 60


def interference_prices(s: Scenario, alpha, p) -> np.ndarray:
    """``price[k, n] = sum_{l != k} alpha[l, n] g[l, k, n] / I[l, n]``."""
    ratio = np.asarray(alpha) / interference_matrix(s, p)
    return np.einsum("lkn,ln->kn", s.cross, ratio)


def _clipped(alpha, price, mu, mask):
    den = mu + price
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(den > 0, alpha / np.where(den > 0, den, 1.0), np.inf)
    # alpha == 0 gives 0 even with a zero denominator
    raw = np.where(alpha > 0, raw, 0.0)
    return np.clip(raw, 0.0, mask)


def fixed_point_power(s: Scenario, alpha, p, k: int, n: int, mu_k: float) -> float:
    """Single-entry update for ``p[k, n]`` at multiplier ``mu_k``.

    A zero denominator (no interference pricing and ``mu_k == 0``) means the
    unconstrained optimum is unbounded, so the mask is returned.
    """
    if mu_k < 0:
        raise ValueError("mu_k must be nonnegative")
    alpha = np.asarray(alpha, dtype=float)
    price = interference_prices(s, alpha, p)[k, n]
    return float(_clipped(alpha[k, n], price, mu_k, s.p_mask[k, n]))


def fixed_point_powers(s: Scenario, alpha, p, mu) -> np.ndarray:
    """All entries of the update at once (Jacobi form)."""
    alpha = np.asarray(alpha, dtype=float)
    price = interference_prices(s, alpha, p)
    return _clipped(alpha, price, np.asarray(mu, dtype=float)[:, None], s.p_mask)


def _solve_mu(alpha, price, mask, p_total, tol):
    """Vectorized multiplier search over the rows of ``alpha``.

    Rows whose budget is slack at ``mu = 0`` get ``mu = 0``; the others are
    bisected until the row sum hits the budget within ``tol * p_total``.
    """
    K, N = alpha.shape
    mu = np.zeros(K)
    active = _clipped(alpha, price, 0.0, mask).sum(axis=1) > p_total
    if not np.any(active):
        return mu
    idx = np.flatnonzero(active)
    a, pr, mk, pt = alpha[idx], price[idx], mask[idx], p_total[idx]

    def total(m):
        return _clipped(a, pr, m[:, None], mk).sum(axis=1)

    lo = np.zeros(idx.size)
    hi = np.max(a, axis=1) * N / pt
    hi = np.where(hi > 0, hi, 1.0)
    for _ in range(MAX_DOUBLINGS):
        over = total(hi) > pt
        if not np.any(over):
            break
        lo = np.where(over, hi, lo)
        hi = np.where(over, 2.0 * hi, hi)
    else:
        raise BracketError(f"could not bracket mu after {MAX_DOUBLINGS} doublings")

    # total(hi) <= pt throughout; stop once it is within tol of the budget
    for _ in range(200):
        if np.all(total(hi) >= pt * (1.0 - tol)) or np.all(hi - lo <= 1e-15 * hi):
            break
        mid = 0.5 * (lo + hi)
        high = total(mid) > pt
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
    # the upper end always satisfies the budget
    mu[idx] = hi
    return mu


def bisect_mu(s: Scenario, alpha, p, k: int, tol: float = 1e-10) -> float:
    """Multiplier of transmitter ``k``'s budget at the current interference.

    Returns 0 when the budget is slack at ``mu = 0``.
    """
    alpha = np.asarray(alpha, dtype=float)
    price = interference_prices(s, alpha, p)
    mu = _solve_mu(alpha[k : k + 1], price[k : k + 1], s.p_mask[k : k + 1], s.p_total[k : k + 1], tol)
    return float(mu[0])


def multipliers(s: Scenario, alpha, p, tol: float = 1e-10) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    price = interference_prices(s, alpha, p)
    return _solve_mu(alpha, price, s.p_mask, s.p_total, tol)


def relative_change(p_new, p_old, floor) -> float:
    return float(np.max(np.abs(p_new - p_old) / np.maximum(p_old, floor)))


def inner_solve(s: Scenario, alpha, p_init, L: int = 8, tol: float = 1e-9, order: str = "jacobi",
                mu_tol: float = 1e-10):
    """Run up to ``L`` fixed-point sweeps from ``p_init``.

    ``order="jacobi"`` computes every entry from the previous sweep;
    ``order="gauss-seidel"`` refreshes interference after each transmitter.
    Returns ``(p, sweeps_used)``. Hitting ``L`` without convergence is normal.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if order not in ("jacobi", "gauss-seidel"):
        raise ValueError(f"unknown sweep order {order!r}")
    alpha = np.asarray(alpha, dtype=float)
    p = np.array(p_init, dtype=float)
    floor = 1e-15 * float(np.max(s.p_total))
    for sweep in range(1, L + 1):
        p_old = p.copy()
        if order == "jacobi":
            price = interference_prices(s, alpha, p)
            mu = _solve_mu(alpha, price, s.p_mask, s.p_total, mu_tol)
            p = _clipped(alpha, price, mu[:, None], s.p_mask)
        else:
            for k in range(s.K):
                price = interference_prices(s, alpha, p)[k : k + 1]
                mu = _solve_mu(alpha[k : k + 1], price, s.p_mask[k : k + 1], s.p_total[k : k + 1], mu_tol)
                p[k] = _clipped(alpha[k : k + 1], price, mu[:, None], s.p_mask[k : k + 1])[0]
        if relative_change(p, p_old, floor) <= tol:
            return p, sweep
    return p, L
