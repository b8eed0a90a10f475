"""Geometric programming via log-variable substitution and a barrier method.

Posynomials become log-sum-exp functions of y = log(x), monomial equalities
become linear equalities, and the resulting smooth convex program is solved
with a feasible-start Newton barrier method. Posynomials carry their
exponents only over the variables they touch, so gradient and Hessian
assembly stay proportional to constraint support size; variable box bounds
are linear in log space and enter the barrier analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GpError(RuntimeError):
    """Infeasible, unbounded, or non-converged geometric program."""


def _logsumexp(logs: np.ndarray) -> float:
    # hot path: scipy's logsumexp spends ~100x this in array-API dispatch
    top = logs.max()
    if not np.isfinite(top):
        return float(top)
    return float(top + np.log(np.exp(logs - top).sum()))


@dataclass(frozen=True)
class Posynomial:
    """Sum of positive-coefficient power products over a variable subset.

    `exponents` has one row per term; its columns follow `support`
    (global variable indices).
    """

    n_vars: int
    coeffs: np.ndarray
    exponents: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if np.any(coeffs <= 0) or not np.all(np.isfinite(coeffs)):
            raise GpError("posynomial coefficients must be strictly positive and finite")
        exponents = np.atleast_2d(np.asarray(self.exponents, dtype=float))
        support = np.atleast_1d(np.asarray(self.support, dtype=int))
        if exponents.shape != (len(coeffs), len(support)):
            raise GpError("exponent matrix shape must be (n_terms, support size)")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "exponents", exponents)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "_log_coeffs", np.log(coeffs))

    @classmethod
    def from_terms(cls, n_vars: int, terms) -> "Posynomial":
        """Build from [(coeff, {var_index: exponent, ...}), ...]."""
        idx = sorted({i for _, powers in terms for i in powers})
        pos = {i: k for k, i in enumerate(idx)}
        coeffs = np.array([c for c, _ in terms], dtype=float)
        exps = np.zeros((len(terms), len(idx)))
        for t, (_, powers) in enumerate(terms):
            for i, e in powers.items():
                exps[t, pos[i]] = e
        return cls(n_vars=n_vars, coeffs=coeffs, exponents=exps,
                   support=np.array(idx, dtype=int))

    @classmethod
    def monomial(cls, n_vars: int, coeff: float, powers: dict) -> "Posynomial":
        return cls.from_terms(n_vars, [(coeff, powers)])

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    def is_monomial(self) -> bool:
        return self.n_terms == 1

    def value(self, x: np.ndarray) -> float:
        """Evaluate in the original (positive) domain."""
        return float(np.exp(self.log_value(np.log(np.asarray(x, dtype=float)))))

    def log_value(self, y: np.ndarray) -> float:
        logs = self._log_coeffs + self.exponents @ y[self.support]
        return _logsumexp(logs)

    def log_val_grad_softmax(self, y: np.ndarray):
        logs = self._log_coeffs + self.exponents @ y[self.support]
        f = _logsumexp(logs)
        s = np.exp(logs - f)
        return f, self.exponents.T @ s, s

    def log_hess_local(self, s: np.ndarray) -> np.ndarray:
        es = self.exponents * s[:, None]
        h = self.exponents.T @ es
        g = self.exponents.T @ s
        return h - np.outer(g, g)

    def terms(self):
        """Iterate (coeff, {var: exp}) pairs."""
        for c, row in zip(self.coeffs, self.exponents):
            yield float(c), {int(i): float(e) for i, e in zip(self.support, row) if e != 0.0}


@dataclass
class GpProblem:
    """minimize objective s.t. each inequality <= 1, each monomial equality == value."""

    n_vars: int
    objective: Posynomial
    inequalities: list = field(default_factory=list)
    equalities: list = field(default_factory=list)  # (monomial Posynomial, value)

    def validate(self) -> "GpProblem":
        for mono, value in self.equalities:
            if not mono.is_monomial():
                raise GpError("equality constraints must be monomials")
            if value <= 0:
                raise GpError("equality right-hand sides must be positive")
        return self


@dataclass
class GpResult:
    x: np.ndarray
    objective: float
    status: str
    kkt_stationarity: float
    kkt_complementarity: float
    kkt_primal: float
    newton_iterations: int

    @property
    def kkt_residual(self) -> float:
        return max(self.kkt_stationarity, self.kkt_complementarity, self.kkt_primal)


def _equality_system(problem: GpProblem):
    rows, rhs = [], []
    for mono, value in problem.equalities:
        row = np.zeros(problem.n_vars)
        row[mono.support] = mono.exponents[0]
        rows.append(row)
        rhs.append(np.log(value) - np.log(mono.coeffs[0]))
    if not rows:
        return np.zeros((0, problem.n_vars)), np.zeros(0)
    return np.array(rows), np.array(rhs)


class _LogConstraint:
    """f(z) = log-sum-exp over a variable subset, minus an optional slack var."""

    def __init__(self, posy: Posynomial, slack_index: int | None = None):
        self.posy = posy
        self.slack_index = slack_index
        if slack_index is None:
            self.indices = posy.support
        else:
            self.indices = np.concatenate([posy.support, [slack_index]])

    def value(self, z: np.ndarray) -> float:
        f = self.posy.log_value(z)
        if self.slack_index is not None:
            f -= z[self.slack_index]
        return f

    def val_grad_hess(self, z: np.ndarray):
        f, grad_local, s = self.posy.log_val_grad_softmax(z)
        hess_local = self.posy.log_hess_local(s)
        if self.slack_index is not None:
            f -= z[self.slack_index]
            grad_local = np.concatenate([grad_local, [-1.0]])
            k = len(hess_local)
            padded = np.zeros((k + 1, k + 1))
            padded[:k, :k] = hess_local
            hess_local = padded
        return f, grad_local, hess_local


class _Barrier:
    """Equality-constrained Newton barrier with analytic box handling.

    `box_lo`/`box_hi` are log-domain bounds (use +-inf where absent);
    posynomial constraints arrive as `_LogConstraint` objects.
    """

    def __init__(self, objective: _LogConstraint | None, constraints, a_eq, dim,
                 box_lo=None, box_hi=None, linear_objective_index=None):
        self.objective = objective
        self.constraints = constraints
        self.a_eq = a_eq
        self.dim = dim
        self.box_lo = np.full(dim, -np.inf) if box_lo is None else box_lo
        self.box_hi = np.full(dim, np.inf) if box_hi is None else box_hi
        self.has_lo = np.isfinite(self.box_lo)
        self.has_hi = np.isfinite(self.box_hi)
        self.n_box = int(self.has_lo.sum() + self.has_hi.sum())
        self.linear_objective_index = linear_objective_index
        self.newton_iterations = 0

    @property
    def n_ineq(self) -> int:
        return len(self.constraints) + self.n_box

    def objective_value(self, z):
        if self.linear_objective_index is not None:
            return z[self.linear_objective_index]
        return self.objective.value(z)

    def in_box(self, z) -> bool:
        return bool(np.all(z[self.has_lo] > self.box_lo[self.has_lo])
                    and np.all(z[self.has_hi] < self.box_hi[self.has_hi]))

    def _barrier_value(self, z, t):
        if not self.in_box(z):
            return np.inf
        phi = t * self.objective_value(z)
        if self.n_box:
            phi -= np.sum(np.log(z[self.has_lo] - self.box_lo[self.has_lo]))
            phi -= np.sum(np.log(self.box_hi[self.has_hi] - z[self.has_hi]))
        for c in self.constraints:
            fv = c.value(z)
            if not np.isfinite(fv) or fv >= 0:
                return np.inf
            phi -= np.log(-fv)
        return phi

    def centering(self, z, t, stop_predicate=None, max_newton=60, grad_tol=None,
                  decrement_tol=1e-11):
        stagnation = 0
        last_decrement = np.inf
        for _ in range(max_newton):
            self.newton_iterations += 1
            grad = np.zeros(self.dim)
            hess_diag = np.full(self.dim, 1e-11)
            hess = np.zeros((self.dim, self.dim))
            if self.linear_objective_index is not None:
                grad[self.linear_objective_index] = t
            else:
                _, g0, h0 = self.objective.val_grad_hess(z)
                idx = self.objective.indices
                grad[idx] += t * g0
                hess[np.ix_(idx, idx)] += t * h0
            if self.n_box:
                lo_gap = z[self.has_lo] - self.box_lo[self.has_lo]
                hi_gap = self.box_hi[self.has_hi] - z[self.has_hi]
                if np.any(lo_gap <= 0) or np.any(hi_gap <= 0):
                    raise GpError("barrier method left the box (internal error)")
                grad[self.has_lo] -= 1.0 / lo_gap
                grad[self.has_hi] += 1.0 / hi_gap
                hess_diag[self.has_lo] += 1.0 / lo_gap ** 2
                hess_diag[self.has_hi] += 1.0 / hi_gap ** 2
            for c in self.constraints:
                fv, gv, hv = c.val_grad_hess(z)
                if fv >= 0:
                    raise GpError("barrier method lost feasibility (internal error)")
                inv = 1.0 / (-fv)
                idx = c.indices
                grad[idx] += inv * gv
                hess[np.ix_(idx, idx)] += inv * hv + (inv * inv) * np.outer(gv, gv)
            hess[np.diag_indices_from(hess)] += hess_diag
            m_eq = self.a_eq.shape[0]
            kkt = np.zeros((self.dim + m_eq, self.dim + m_eq))
            kkt[: self.dim, : self.dim] = hess
            if m_eq:
                kkt[: self.dim, self.dim:] = self.a_eq.T
                kkt[self.dim:, : self.dim] = self.a_eq
            rhs = np.concatenate([-grad, np.zeros(m_eq)])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            dz = sol[: self.dim]
            decrement_sq = float(dz @ (hess @ dz))
            grad_ok = grad_tol is None or np.max(np.abs(grad)) <= grad_tol * max(t, 1.0)
            if decrement_sq / 2.0 <= decrement_tol and grad_ok:
                return z
            # numerical floor: tiny decrements that refuse to shrink mean the
            # KKT solves are returning noise, so stop polishing
            if decrement_sq < 1e-8 and decrement_sq >= 0.9 * last_decrement:
                stagnation += 1
                if stagnation >= 4:
                    return z
            else:
                stagnation = 0
            last_decrement = decrement_sq
            step_cap = np.max(np.abs(dz))
            alpha = 1.0 if step_cap <= 20.0 else 20.0 / step_cap
            z_next = None
            if decrement_sq <= 1e-4:
                # Newton phase: the barrier value is too noisy at large t for
                # Armijo tests, so only guard feasibility
                for _ in range(80):
                    cand = z + alpha * dz
                    if np.isfinite(self._barrier_value(cand, t)):
                        z_next = cand
                        break
                    alpha *= 0.5
                if z_next is None or np.max(np.abs(alpha * dz)) < 1e-15:
                    return z
            else:
                phi0 = self._barrier_value(z, t)
                slope = float(grad @ dz)
                for _ in range(80):
                    cand = z + alpha * dz
                    phi = self._barrier_value(cand, t)
                    if phi <= phi0 + 0.25 * alpha * slope:
                        z_next = cand
                        break
                    alpha *= 0.5
                if z_next is None:
                    return z
            z = z_next
            if stop_predicate is not None and stop_predicate(z):
                return z
            bounded = z if self.linear_objective_index is None \
                else np.delete(z, self.linear_objective_index)
            if bounded.size and np.max(np.abs(bounded)) > 200.0:
                raise GpError("iterates diverged; problem appears unbounded")
        return z

    def solve(self, z0, t0=1.0, mu=30.0, tol_comp=1e-8, max_outer=60, stop_predicate=None,
              final_grad_tol=1e-8):
        """Path-following loop; stops once per-constraint complementarity 1/t
        falls below tol_comp (larger t makes the Newton systems numerically
        unsolvable in double precision). Intermediate centerings stop at a
        loose decrement; only the final one is polished."""
        z, t = z0, t0
        for _ in range(max_outer):
            is_final = self.n_ineq == 0 or 1.0 / t <= tol_comp
            z = self.centering(z, t, stop_predicate=stop_predicate,
                               grad_tol=final_grad_tol if is_final else None,
                               decrement_tol=1e-11 if is_final else 1e-5)
            if stop_predicate is not None and stop_predicate(z):
                return z, t
            if is_final:
                return z, t
            t *= mu
        return z, t


def _find_feasible(problem: GpProblem, a_eq, y0, box_lo, box_hi):
    """Phase I: minimize slack s over f_i(y) <= s, A y = b, y inside the box."""
    n = problem.n_vars
    dim = n + 1
    constraints = [_LogConstraint(c, slack_index=n) for c in problem.inequalities]
    a_aug = np.hstack([a_eq, np.zeros((a_eq.shape[0], 1))]) if a_eq.shape[0] else np.zeros((0, dim))
    s0 = max(c.log_value(y0) for c in problem.inequalities) + 1.0
    z = np.concatenate([y0, [s0]])
    barrier = _Barrier(None, constraints, a_aug, dim,
                       box_lo=np.concatenate([box_lo, [-np.inf]]),
                       box_hi=np.concatenate([box_hi, [np.inf]]),
                       linear_objective_index=n)
    strictly_feasible = lambda z: z[-1] < -1e-3
    # at parameter t the centered slack sits near f_max + m/t, so start t
    # large enough that the slack is pulled toward (not away from) zero
    t0 = max(1.0, 2.0 * barrier.n_ineq)
    z, _ = barrier.solve(z, t0=t0, tol_comp=1e-10, stop_predicate=strictly_feasible)
    if z[-1] >= 0:
        raise GpError("problem is infeasible (phase I slack stayed non-negative)")
    return z[:n]


def _log_bounds(n, lower, upper):
    box_lo = np.full(n, -np.inf)
    box_hi = np.full(n, np.inf)
    with np.errstate(divide="ignore"):
        if lower is not None:
            lower = np.broadcast_to(np.asarray(lower, dtype=float), (n,))
            positive = lower > 0
            box_lo[positive] = np.log(lower[positive])
        if upper is not None:
            upper = np.broadcast_to(np.asarray(upper, dtype=float), (n,))
            finite = np.isfinite(upper)
            box_hi[finite] = np.log(upper[finite])
    if np.any(box_lo >= box_hi):
        raise GpError("empty variable box")
    return box_lo, box_hi


def gp_solve(
    problem: GpProblem,
    x0: np.ndarray | None = None,
    lower=None,
    upper=None,
    tol_comp: float = 1e-8,
    t0: float = 1.0,
) -> GpResult:
    """Solve a geometric program; returns the optimum in the original domain.

    `x0`, when given, must be strictly positive; it seeds the search and, if
    strictly feasible, skips phase I. `lower`/`upper` add box constraints.
    A warm `x0` near the optimum pairs well with a larger `t0`.
    """
    problem = problem.validate()
    n = problem.n_vars
    box_lo, box_hi = _log_bounds(n, lower, upper)
    a_eq, b_eq = _equality_system(problem)
    y0 = np.zeros(n) if x0 is None else np.log(np.asarray(x0, dtype=float))
    y0 = np.clip(y0, np.where(np.isfinite(box_lo), box_lo + 1e-12, -np.inf),
                 np.where(np.isfinite(box_hi), box_hi - 1e-12, np.inf))
    if a_eq.shape[0]:
        correction = np.linalg.lstsq(a_eq, b_eq - a_eq @ y0, rcond=None)[0]
        y0 = y0 + correction
        if np.max(np.abs(a_eq @ y0 - b_eq)) > 1e-8:
            raise GpError("equality constraints are inconsistent")
    boxed = np.all(y0 > box_lo) and np.all(y0 < box_hi)
    interior = boxed and all(c.log_value(y0) < -1e-10 for c in problem.inequalities)
    if not interior:
        if not boxed:
            mid = np.clip(np.zeros(n), np.where(np.isfinite(box_lo), box_lo + 0.1, -3.0),
                          np.where(np.isfinite(box_hi), box_hi - 0.1, 3.0))
            y0 = mid
            if a_eq.shape[0]:
                correction = np.linalg.lstsq(a_eq, b_eq - a_eq @ y0, rcond=None)[0]
                y0 = y0 + correction
            if not (np.all(y0 > box_lo) and np.all(y0 < box_hi)):
                raise GpError("could not find a point inside the box satisfying equalities")
        if problem.inequalities:
            y0 = _find_feasible(problem, a_eq, y0, box_lo, box_hi)
    constraints = [_LogConstraint(c) for c in problem.inequalities]
    barrier = _Barrier(_LogConstraint(problem.objective), constraints, a_eq, n,
                       box_lo=box_lo, box_hi=box_hi)
    y, t = barrier.solve(y0, t0=t0, tol_comp=tol_comp)

    # KKT residuals of the log-domain convex program
    _, g0, _ = barrier.objective.val_grad_hess(y)
    grad = np.zeros(n)
    grad[barrier.objective.indices] += g0
    comp = 1.0 / t if barrier.n_ineq else 0.0
    primal = 0.0
    for c in constraints:
        fv, gv, _ = c.val_grad_hess(y)
        lam = 1.0 / (t * (-fv))
        grad[c.indices] += lam * gv
        primal = max(primal, fv)
    if barrier.n_box:
        grad[barrier.has_lo] -= 1.0 / (t * (y[barrier.has_lo] - box_lo[barrier.has_lo]))
        grad[barrier.has_hi] += 1.0 / (t * (box_hi[barrier.has_hi] - y[barrier.has_hi]))
    if a_eq.shape[0]:
        nu = np.linalg.lstsq(a_eq.T, -grad, rcond=None)[0]
        grad = grad + a_eq.T @ nu
        primal = max(primal, float(np.max(np.abs(a_eq @ y - b_eq))))
    x = np.exp(y)
    return GpResult(
        x=x,
        objective=problem.objective.value(x),
        status="optimal",
        kkt_stationarity=float(np.max(np.abs(grad))),
        kkt_complementarity=comp,
        kkt_primal=max(primal, 0.0),
        newton_iterations=barrier.newton_iterations,
    )
