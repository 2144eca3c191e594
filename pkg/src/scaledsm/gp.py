"""Geometric-programming inner solver.

The per-iteration surrogate is written as a standard-form GP in the variables
``q_kn`` (log power) and auxiliary ``t_kn`` (log interference-plus-noise)::

    minimize    exp(sum_kn alpha_kn (t_kn - q_kn))
    subject to  sum_n exp(q_kn) / P_tot,k                          <= 1
                (sum_{l!=k} g_kln exp(q_ln) + sigma2_kn) exp(-t_kn) <= 1
                exp(q_kn) / P_mask,kn                               <= 1
                q_kn >= log(xi),  t_kn >= log(sigma2_kn)

Taking logs of every posynomial gives log-sum-exp functions of the variables,
which a log-barrier Newton method minimizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from . import lowcomplexity as lc
from .model import Scenario, interference_matrix


@dataclass(frozen=True)
class Monomial:
    """``coeff * prod_i x_i ** exponents[i]`` with ``coeff > 0``."""

    coeff: float
    exponents: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.coeff > 0:
            raise ValueError(f"monomial coefficient must be positive, got {self.coeff}")


@dataclass
class GPProblem:
    num_vars: int
    objective: list
    constraints: list
    lower_bounds: np.ndarray
    var_names: list = field(default_factory=list)
    constraint_names: list = field(default_factory=list)
    # Layout of the power-control variables; -1 marks a pinned / absent entry.
    q_index: np.ndarray | None = None
    t_index: np.ndarray | None = None
    # Optional redundant upper bounds (+inf for none). They keep the barrier
    # bounded below when an objective exponent is tiny.
    upper_bounds: np.ndarray | None = None

    def __post_init__(self):
        self.lower_bounds = np.asarray(self.lower_bounds, dtype=float)
        if self.lower_bounds.shape != (self.num_vars,):
            raise ValueError("every variable needs a lower bound")
        if self.upper_bounds is None:
            self.upper_bounds = np.full(self.num_vars, np.inf)
        self.upper_bounds = np.asarray(self.upper_bounds, dtype=float)
        if self.upper_bounds.shape != (self.num_vars,) or np.any(self.upper_bounds <= self.lower_bounds):
            raise ValueError("upper bounds must exceed lower bounds")
        for poly in [self.objective, *self.constraints]:
            for mono in poly:
                for i in mono.exponents:
                    if not 0 <= i < self.num_vars:
                        raise ValueError(f"monomial references unknown variable {i}")

    def dump(self) -> str:
        """One line per monomial: ``constraint_id coeff (var:exp)*``.

        The objective has id 0; constraint ``j`` (1-based) has id ``j``.
        """
        lines = []
        for cid, poly in enumerate([self.objective, *self.constraints]):
            for mono in poly:
                terms = " ".join(f"{i}:{e:.17g}" for i, e in sorted(mono.exponents.items()))
                lines.append(f"{cid} {mono.coeff:.17g} {terms}".rstrip())
        return "\n".join(lines) + "\n"


def parse_gp_dump(text: str, num_vars: int, lower_bounds) -> GPProblem:
    """Inverse of :meth:`GPProblem.dump` (names and layout are not stored)."""
    polys: dict[int, list] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        head, coeff, *terms = line.split()
        exps = {int(i): float(e) for i, e in (t.split(":") for t in terms)}
        polys.setdefault(int(head), []).append(Monomial(float(coeff), exps))
    n_cons = max(polys) if polys else 0
    return GPProblem(
        num_vars=num_vars,
        objective=polys.get(0, []),
        constraints=[polys.get(j, []) for j in range(1, n_cons + 1)],
        lower_bounds=lower_bounds,
    )


@dataclass
class GPConfig:
    """Inner GP solver settings.

    ``xi`` is the power floor. If it is None, ``epsilon`` (tolerated WSR loss)
    is converted with :func:`xi_from_epsilon`; with neither, ``1e-10`` times
    the smallest budget is used.

    With ``warm_start`` the barrier method starts next to the point reached by
    ``warm_sweeps`` fixed-point sweeps on the same surrogate. The answer is
    still certified by the duality gap; the start only shortens the first
    centering. A failed warm solve falls back to the default start.

    If round-off stops the barrier method before ``duality_gap_tol``, the
    last centered point is accepted when its gap is below ``accept_gap``
    times ``max(1, |objective|)``.
    """

    xi: float | None = None
    epsilon: float | None = None
    newton_tol: float = 1e-9
    barrier_mu: float = 20.0
    max_newton: int = 200
    duality_gap_tol: float = 1e-9
    accept_gap: float = 1e-6
    warm_start: bool = True
    warm_sweeps: int = 200

    def __post_init__(self):
        if self.xi is not None and not self.xi > 0:
            raise ValueError("xi must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not (self.newton_tol > 0 and self.duality_gap_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.barrier_mu > 1:
            raise ValueError("barrier_mu must exceed 1")

    def resolve_xi(self, s: Scenario) -> float:
        if self.xi is not None:
            return float(self.xi)
        if self.epsilon is not None:
            return xi_from_epsilon(s, self.epsilon)
        return 1e-10 * float(np.min(s.p_total))


# --- floor selection ------------------------------------------------------


def coupling_constant(s: Scenario) -> float:
    """``max_{k,l,n} w_l g_lkn / sigma2_ln`` over all link pairs."""
    return float(np.max(s.weight[:, None, None] * s.gain / s.noise[:, None, :]))


def wsr_loss_bound(s: Scenario, xi: float) -> float:
    """Worst-case drop of the optimal WSR caused by the floor ``p >= xi``.

    The bound is derived for ``xi`` much smaller than
    ``P_tot,k / (N (N + 1))``; :func:`floor_in_regime` reports whether that
    holds.
    """
    return 2.0 * xi * s.N * s.K**2 * coupling_constant(s)


def floor_in_regime(s: Scenario, xi: float) -> bool:
    return xi <= float(np.min(s.p_total)) / (s.N * (s.N + 1))


def xi_from_epsilon(s: Scenario, epsilon: float) -> float:
    """Largest floor whose WSR-loss bound stays below ``epsilon``, clamped
    into the small-floor regime and the solver's feasibility limits."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    xi = epsilon / (2.0 * s.N * s.K**2 * coupling_constant(s))
    cap = min(
        float(np.min(s.p_total)) / (s.N * (s.N + 1)) * 1e-2,
        0.5 * float(np.min(s.p_mask)),
        0.5 * float(np.min(s.p_total)) / s.N,
    )
    return min(xi, cap)


# --- problem construction -----------------------------------------------


def build_gp(s: Scenario, alpha, xi: float) -> GPProblem:
    """Surrogate maximization for coefficients ``alpha`` as a standard-form GP.

    Entries with ``alpha == 0`` do not affect the objective; their power is
    pinned at ``xi`` and their auxiliary variable is dropped.
    """
    alpha = np.asarray(alpha, dtype=float)
    K, N = s.K, s.N
    if alpha.shape != (K, N) or np.any(alpha < 0):
        raise ValueError("alpha must be a nonnegative K x N array")
    if not xi > 0:
        raise ValueError("xi must be positive")
    if xi >= float(np.min(s.p_mask)):
        raise ValueError(f"xi={xi:g} leaves an empty box under the smallest mask")
    if xi * N > float(np.min(s.p_total)):
        raise ValueError(f"xi={xi:g} times N exceeds the smallest budget")

    free = alpha > 0
    q_index = -np.ones((K, N), dtype=int)
    t_index = -np.ones((K, N), dtype=int)
    # Upper bounds implied by the constraints, with a factor-2 margin so
    # they are never active: p <= min(mask, budget), I <= I(p at that cap).
    cap = np.minimum(s.p_mask, s.p_total[:, None])
    i_max = interference_matrix(s, cap)
    names, lower, upper = [], [], []
    for k in range(K):
        for n in range(N):
            if free[k, n]:
                q_index[k, n] = len(names)
                names.append(f"q_{k}_{n}")
                lower.append(np.log(xi))
                upper.append(np.log(2.0 * cap[k, n]))
    for k in range(K):
        for n in range(N):
            if free[k, n]:
                t_index[k, n] = len(names)
                names.append(f"t_{k}_{n}")
                lower.append(np.log(s.noise[k, n]))
                upper.append(np.log(2.0 * i_max[k, n]))

    def power_term(coeff, l, n, extra=None):
        # coeff * p_ln, with pinned powers folded into the coefficient
        ex = dict(extra or {})
        if q_index[l, n] >= 0:
            ex[q_index[l, n]] = ex.get(q_index[l, n], 0.0) + 1.0
            return Monomial(coeff, ex)
        return Monomial(coeff * xi, ex)

    obj_exp = {}
    for k, n in zip(*np.nonzero(free)):
        obj_exp[t_index[k, n]] = float(alpha[k, n])
        obj_exp[q_index[k, n]] = -float(alpha[k, n])
    objective = [Monomial(1.0, obj_exp)]

    constraints, cnames = [], []
    for k in range(K):
        constraints.append([power_term(1.0 / s.p_total[k], k, n) for n in range(N)])
        cnames.append(f"sum_power_{k}")
    for k in range(K):
        for n in range(N):
            if not free[k, n]:
                continue
            t = t_index[k, n]
            poly = [power_term(s.gain[k, l, n], l, n, {t: -1.0}) for l in range(K) if l != k]
            poly.append(Monomial(float(s.noise[k, n]), {t: -1.0}))
            constraints.append(poly)
            cnames.append(f"interference_{k}_{n}")
    for k in range(K):
        for n in range(N):
            if free[k, n]:
                constraints.append([Monomial(1.0 / s.p_mask[k, n], {q_index[k, n]: 1.0})])
                cnames.append(f"mask_{k}_{n}")

    return GPProblem(
        num_vars=len(names),
        objective=objective,
        constraints=constraints,
        lower_bounds=np.array(lower),
        upper_bounds=np.array(upper),
        var_names=names,
        constraint_names=cnames,
        q_index=q_index,
        t_index=t_index,
    )


# --- convex form ----------------------------------------------------------


class ConvexProgram:
    """Log-transformed GP: every posynomial ``f_j`` becomes
    ``g_j(y) = log f_j(exp(y)) = logsumexp(A_j y + b_j)``.

    Function 0 is the objective; functions ``1..J`` are the ``<= 0``
    constraints. Variables also carry box bounds ``lower < y < upper``.
    """

    def __init__(self, gp: GPProblem):
        rows, cols, vals, b, group = [], [], [], [], []
        r = 0
        for j, poly in enumerate([gp.objective, *gp.constraints]):
            if not poly:
                raise ValueError(f"function {j} has no monomials")
            for mono in poly:
                for i, e in mono.exponents.items():
                    if e != 0.0:
                        rows.append(r)
                        cols.append(i)
                        vals.append(e)
                b.append(np.log(mono.coeff))
                group.append(j)
                r += 1
        self.n = gp.num_vars
        self.num_functions = len(gp.constraints) + 1
        self.A = sp.csr_matrix((vals, (rows, cols)), shape=(r, self.n))
        self.AT = self.A.T.tocsr()
        self.b = np.array(b)
        self.group = np.array(group)
        self.starts = np.flatnonzero(np.r_[True, self.group[1:] != self.group[:-1]])
        self.lower = gp.lower_bounds.copy()
        self.upper = gp.upper_bounds.copy()
        self._has_upper = np.isfinite(self.upper)
        self._ar = np.arange(r)

        # Single-monomial functions are affine after the log transform, so
        # their Hessian vanishes exactly; dropping it avoids dense round-off.
        count = np.bincount(self.group, minlength=self.num_functions)
        self._single = count == 1
        indicator = sp.csr_matrix((np.ones(r), (self.group, self._ar)), shape=(self.num_functions, r))
        width = np.diff((indicator @ abs(self.A)).tocsr().indptr)
        # Functions touching many variables enter the Newton system as
        # low-rank updates instead of dense sparse-matrix blocks.
        self._wide = width > WIDE_FUNCTION
        self._wide_idx = np.flatnonzero(self._wide)
        self._narrow_idx = np.flatnonzero(~self._wide)
        self._row_multi = ~self._single[self.group]

    @property
    def num_constraints(self) -> int:
        return self.num_functions - 1

    def _softmax(self, y):
        z = self.A @ y + self.b
        zmax = np.maximum.reduceat(z, self.starts)
        e = np.exp(z - zmax[self.group])
        tot = np.add.reduceat(e, self.starts)
        return zmax + np.log(tot), e / tot[self.group]

    def values(self, y) -> np.ndarray:
        """All ``g_j(y)``, objective first."""
        return self._softmax(np.asarray(y, dtype=float))[0]

    def _grad_matrix(self, w):
        R = sp.csr_matrix((w, (self.group, self._ar)), shape=(self.num_functions, self.A.shape[0]))
        return R @ self.A

    def gradients(self, y) -> sp.csr_matrix:
        """Sparse matrix whose row ``j`` is the gradient of ``g_j``."""
        _, w = self._softmax(np.asarray(y, dtype=float))
        return self._grad_matrix(w)

    def hessian(self, j: int, y) -> np.ndarray:
        """Dense Hessian of ``g_j``: ``A_j^T (diag(s) - s s^T) A_j``."""
        _, w = self._softmax(np.asarray(y, dtype=float))
        rows = self.group == j
        Aj = self.A[rows].toarray()
        s_ = w[rows]
        return Aj.T @ (s_[:, None] * Aj) - np.outer(Aj.T @ s_, Aj.T @ s_)

    def function(self, j: int):
        """``(value, gradient, hessian)`` callables for ``g_j``."""
        return (
            lambda y: float(self.values(y)[j]),
            lambda y: self.gradients(y)[j].toarray().ravel(),
            lambda y: self.hessian(j, y),
        )

    def strictly_feasible(self, y) -> bool:
        y = np.asarray(y, dtype=float)
        if not np.all(y > self.lower) or not np.all(y < self.upper):
            return False
        return bool(np.all(self.values(y)[1:] < 0))

    # Barrier pieces ---------------------------------------------------

    def barrier_value(self, y, t):
        """``t g_0(y) - sum log(-g_j(y))`` minus the box log terms; inf outside."""
        slack_box = y - self.lower
        slack_up = (self.upper - y)[self._has_upper]
        if np.any(slack_box <= 0) or np.any(slack_up <= 0):
            return np.inf
        g = self.values(y)
        if np.any(g[1:] >= 0) or not np.all(np.isfinite(g)):
            return np.inf
        return t * g[0] - np.sum(np.log(-g[1:])) - np.sum(np.log(slack_box)) - np.sum(np.log(slack_up))

    def barrier_derivatives(self, y, t):
        """Value vector, gradient and Newton-system pieces of the barrier
        function at weight ``t``.

        The Hessian is ``S + V diag(omega) V^T`` with ``S`` sparse (CSC) and
        one dense column of ``V`` per wide function.
        """
        g, w = self._softmax(y)
        c = np.empty(self.num_functions)
        c[0] = t
        c[1:] = -1.0 / g[1:]
        G = self._grad_matrix(w)
        slack = y - self.lower
        slack_up = np.where(self._has_upper, self.upper - y, np.inf)
        grad = G.T @ c - 1.0 / slack + 1.0 / slack_up

        # sum_j c_j Hess(g_j) + sum_{j>=1} grad_j grad_j^T / g_j^2 + box terms;
        # Hess(g_j) = A_j^T diag(s_j) A_j - grad_j grad_j^T
        d = np.where(self._row_multi, c[self.group] * w, 0.0)
        outer = c**2 - np.where(self._single, 0.0, c)
        outer[0] = 0.0 if self._single[0] else -t
        Gn = G[self._narrow_idx]
        S = (
            self.AT @ sp.diags(d) @ self.A
            + Gn.T @ sp.diags(outer[self._narrow_idx]) @ Gn
            + sp.diags(1.0 / slack**2 + 1.0 / slack_up**2)
        ).tocsc()
        omega = outer[self._wide_idx]
        keep = omega != 0.0
        V = G[self._wide_idx[keep]].toarray().T
        return g, grad, S, V, omega[keep]

    def barrier_hessian(self, y, t) -> np.ndarray:
        """Dense Hessian of the barrier function (for checks and small problems)."""
        _, _, S, V, omega = self.barrier_derivatives(np.asarray(y, dtype=float), t)
        return S.toarray() + (V * omega) @ V.T


def to_convex(gp: GPProblem) -> ConvexProgram:
    return ConvexProgram(gp)


# --- barrier solver -------------------------------------------------------


class GPSolverError(RuntimeError):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class Infeasible(GPSolverError):
    pass


class MaxIterations(GPSolverError):
    pass


class NumericalFailure(GPSolverError):
    pass


@dataclass
class SolveStatus:
    newton_steps: int
    centering_steps: int
    duality_gap: float
    objective: float
    # False when round-off stopped the method short of duality_gap_tol and
    # the last centered point (within accept_gap) was returned instead
    converged: bool = True


_DENSE_LIMIT = 300
WIDE_FUNCTION = 16


def _newton_direction(S, V, omega, grad):
    """Solve ``(S + V diag(omega) V^T) dx = -grad``."""
    n = grad.size
    try:
        if n <= _DENSE_LIMIT:
            H = S.toarray() + (V * omega) @ V.T
            c = scipy.linalg.cho_factor(H, check_finite=True)
            dx = -scipy.linalg.cho_solve(c, grad)
        else:
            lu = scipy.sparse.linalg.splu(S)
            x0 = lu.solve(grad)
            if V.shape[1]:
                Z = lu.solve(V)
                M = np.diag(1.0 / omega) + V.T @ Z
                x0 = x0 - Z @ np.linalg.solve(M, V.T @ x0)
            dx = -x0
    except (np.linalg.LinAlgError, ValueError, RuntimeError) as exc:
        raise NumericalFailure(f"Newton system solve failed: {exc}") from exc
    if not np.all(np.isfinite(dx)):
        raise NumericalFailure("non-finite Newton step")
    return dx


def solve_convex(cp: ConvexProgram, cfg: GPConfig, y_start):
    """Minimize ``g_0`` subject to ``g_j <= 0`` and the box by a log-barrier
    Newton method. Returns ``(y, SolveStatus)``."""
    y = np.array(y_start, dtype=float)
    if y.shape != (cp.n,):
        raise ValueError("starting point has the wrong size")
    if not cp.strictly_feasible(y):
        raise Infeasible("starting point is not strictly feasible", y)

    m = cp.num_constraints + cp.n + int(np.sum(cp._has_upper))
    # initial weight: best least-squares balance of objective and barrier
    barrier_grad = cp.barrier_derivatives(y, 0.0)[1]
    obj_grad = cp.gradients(y)[0].toarray().ravel()
    denom = float(obj_grad @ obj_grad)
    t = -float(obj_grad @ barrier_grad) / denom if denom > 0 else 1.0
    t = float(np.clip(t, 1e-3, 1e6)) if np.isfinite(t) else 1.0
    t = max(t, m / 1e6)

    total_newton = 0
    centering = 0
    centered = None  # (y, t) after the last completed centering
    while True:
        centering += 1
        try:
            y, steps = _center(cp, cfg, y, t)
        except (NumericalFailure, MaxIterations) as exc:
            # Very large barrier weights leave the Newton system at the limit
            # of double precision; keep the last centered point if it is
            # already accurate enough.
            if centered is not None:
                y_c, t_c = centered
                obj = float(cp.values(y_c)[0])
                if m / t_c <= cfg.accept_gap * max(1.0, abs(obj)):
                    return y_c, SolveStatus(total_newton, centering - 1, m / t_c, obj, converged=False)
            raise exc
        total_newton += steps
        centered = (y, t)
        if m / t <= cfg.duality_gap_tol:
            break
        t *= cfg.barrier_mu

    return y, SolveStatus(total_newton, centering, m / t, float(cp.values(y)[0]))


def _center(cp: ConvexProgram, cfg: GPConfig, y, t):
    """Damped Newton on the barrier function at weight ``t``; returns the
    centered point and the number of steps taken."""
    for steps in range(cfg.max_newton):
        g, grad, S, V, omega = cp.barrier_derivatives(y, t)
        try:
            dx = _newton_direction(S, V, omega, grad)
        except NumericalFailure as exc:
            raise NumericalFailure(str(exc), y) from exc
        lam2 = -float(grad @ dx)
        if lam2 < 0:
            raise NumericalFailure("Hessian is not positive definite", y)
        f0 = cp.barrier_value(y, t)
        # below ~1e-12 |F| the decrement is lost in roundoff of F itself
        if lam2 / 2.0 <= max(cfg.newton_tol, 1e-12 * abs(f0)):
            return y, steps
        step = 1.0
        slope = float(grad @ dx)
        while True:
            y_new = y + step * dx
            f_new = cp.barrier_value(y_new, t)
            if f_new <= f0 + 0.01 * step * slope:
                break
            step *= 0.5
            if step < 1e-14:
                # no progress possible at double precision; centered enough
                return y, steps
        y = y_new
    raise MaxIterations(f"centering did not converge in {cfg.max_newton} Newton steps", y)


# --- inner solve ----------------------------------------------------------


def strictly_feasible_start(s: Scenario, gp: GPProblem, xi: float) -> np.ndarray:
    """Interior point: each power at ``0.9 min(mask, P_tot / N)`` (never
    below twice the floor) and each ``t`` 0.1 above its interference level."""
    p = 0.9 * np.minimum(s.p_mask, s.p_total[:, None] / s.N)
    p = np.maximum(p, 2.0 * xi)
    free = gp.q_index >= 0
    p = np.where(free, p, xi)
    y = np.empty(gp.num_vars)
    y[gp.q_index[free]] = np.log(p[free])
    tfree = gp.t_index >= 0
    y[gp.t_index[tfree]] = np.log(interference_matrix(s, p)[tfree]) + 0.1
    return y


def interior_point_near(s: Scenario, gp: GPProblem, xi: float, p) -> np.ndarray:
    """Strictly feasible point close to power ``p`` (pulled inside the mask,
    the budget and the floor by a relative margin of 1e-3)."""
    cap = np.minimum(s.p_mask, s.p_total[:, None])
    p = np.clip(np.asarray(p, dtype=float), 2.0 * xi, cap * (1 - 1e-3))
    p = p * np.minimum(1.0, (1 - 1e-3) * s.p_total / p.sum(axis=1))[:, None]
    p = np.maximum(p, 2.0 * xi)
    free = gp.q_index >= 0
    p = np.where(free, p, xi)
    y = np.empty(gp.num_vars)
    y[gp.q_index[free]] = np.log(p[free])
    y[gp.t_index[free]] = np.log(interference_matrix(s, p)[free]) + 0.01
    return y


def gp_inner_solve_with_status(s: Scenario, alpha, cfg: GPConfig, p_hint=None):
    """Solve the surrogate GP; ``p_hint`` seeds the warm start (default:
    uniform allocation)."""
    xi = cfg.resolve_xi(s)
    gp = build_gp(s, alpha, xi)
    cp = ConvexProgram(gp)
    result = None
    if cfg.warm_start:
        seed = np.minimum(s.p_total[:, None] / s.N, s.p_mask) if p_hint is None else p_hint
        guess, _ = lc.inner_solve(s, alpha, seed, L=cfg.warm_sweeps)
        y0 = interior_point_near(s, gp, xi, guess)
        if cp.strictly_feasible(y0):
            try:
                result = solve_convex(cp, cfg, y0)
            except GPSolverError:
                result = None
    if result is None:
        result = solve_convex(cp, cfg, strictly_feasible_start(s, gp, xi))
    y, status = result
    p = np.full((s.K, s.N), xi)
    free = gp.q_index >= 0
    p[free] = np.exp(y[gp.q_index[free]])
    return p, status


def gp_inner_solve(s: Scenario, alpha, cfg: GPConfig, p_hint=None) -> np.ndarray:
    """Global maximizer of the surrogate with powers floored at ``xi``."""
    return gp_inner_solve_with_status(s, alpha, cfg, p_hint)[0]
