"""Budget-constrained activity-rate optimization.

The homogeneous problem is a one-dimensional minimization of the
reproduction number. The heterogeneous problem minimizes the spectral
abscissa of the infection Jacobian via successive geometric programming:
non-posynomial rate ratios are replaced by anchored monomial
under-approximations, trust regions keep each iterate near its anchor, and
every geometric program is solved by the log-barrier solver in `gp`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import qmatrix, threshold
from .gp import GpError, GpProblem, GpResult, Posynomial, gp_solve
from .netgen import LayeredNetwork, closeness_centrality
from .params import ActivityRates, EpidemicParams, HomogeneousParams, ParameterError


@dataclass(frozen=True)
class CostFamily:
    """Per-node activity cost as a posynomial in 1/gamma.

    Terms are (coefficient, exponent) pairs with positive coefficients and
    negative exponents, so the cost decreases as activity rises and stays
    GP-compatible.
    """

    term_list: tuple = ((1.0, -1.0),)

    def __post_init__(self):
        for coeff, exponent in self.term_list:
            if coeff <= 0:
                raise ParameterError("cost coefficients must be positive")
            if exponent >= 0:
                raise ParameterError("cost exponents must be negative (cost falls with activity)")

    def value(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        total = np.zeros_like(gamma)
        for coeff, exponent in self.term_list:
            total = total + coeff * gamma ** exponent
        return total

    def total(self, gammas) -> float:
        return float(np.sum(self.value(gammas)))

    def rate_for_cost(self, cost: float, lo: float = 1e-12, hi: float = 1e12) -> float:
        """Invert the (strictly decreasing) per-node cost by bisection."""
        if self.value(lo) < cost:
            return lo
        if self.value(hi) > cost:
            return hi
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            if self.value(mid) > cost:
                lo = mid
            else:
                hi = mid
        return float(np.sqrt(lo * hi))


RECIPROCAL_COST = CostFamily()


def solve_homogeneous(
    hp: HomogeneousParams,
    n: int,
    budget: float,
    lo: float,
    hi: float,
    cost: CostFamily = RECIPROCAL_COST,
) -> tuple[float, float]:
    """Minimize the reproduction number over the budget-feasible gamma1 interval.

    The total cost n*f(gamma1) is decreasing, so the budget acts as a lower
    bound on gamma1. Returns (gamma1, r0).
    """
    if lo > hi:
        raise ParameterError("lower bound exceeds upper bound")
    gamma_budget = cost.rate_for_cost(budget / n)
    lo_eff = max(lo, gamma_budget)
    if lo_eff > hi * (1 + 1e-12):
        raise ParameterError(
            f"infeasible budget: even gamma1={hi} costs {n * cost.value(hi):.6g} > {budget:.6g}"
        )
    lo_eff = min(lo_eff, hi)
    objective = lambda g: threshold.r0(hp.with_gamma1(g))
    if hi - lo_eff < 1e-12:
        best = lo_eff
    else:
        res = minimize_scalar(objective, bounds=(lo_eff, hi), method="bounded",
                              options={"xatol": 1e-10})
        best = float(res.x)
        for endpoint in (lo_eff, hi):
            if objective(endpoint) < objective(best):
                best = endpoint
    return best, objective(best)


def monomial_approx(posy: Posynomial, anchor: np.ndarray) -> Posynomial:
    """Best monomial under-approximation of a posynomial near a positive anchor.

    Weights each term by its share of the total at the anchor; the result
    matches the posynomial at the anchor and never exceeds it elsewhere.
    """
    anchor = np.asarray(anchor, dtype=float)
    x_sup = anchor[posy.support]
    if np.any(x_sup <= 0):
        raise ParameterError("anchor must be strictly positive on the posynomial support")
    term_values = posy.coeffs * np.prod(x_sup ** posy.exponents, axis=1)
    total = term_values.sum()
    if total <= 0 or np.any(term_values <= 0):
        raise ParameterError("posynomial terms must be positive at the anchor")
    alphas = term_values / total
    exponent = alphas @ posy.exponents
    coeff = total / np.prod(x_sup ** exponent)
    return Posynomial(posy.n_vars, np.array([coeff]), exponent[None, :], posy.support)


@dataclass
class SgpConfig:
    budget: float
    lower: np.ndarray
    upper: np.ndarray
    cost: CostFamily = RECIPROCAL_COST
    trust_factor: float = 1.1
    tol: float = 1e-4
    max_iterations: int = 50
    gp_tol_comp: float = 2e-8
    u_box: float = 1e10
    crossover: bool = True

    def bounds_for(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if np.any(lo <= 0) or np.any(lo > hi):
            raise ParameterError("need 0 < lower <= upper for every node")
        if self.trust_factor <= 1.0:
            raise ParameterError("trust_factor must exceed 1")
        return lo, hi


@dataclass
class SgpResult:
    gamma1: np.ndarray
    lam: float
    trace: list
    u: np.ndarray | None
    zeta: np.ndarray | None
    iterations: int
    converged: bool
    status: str = "ok"


def _perron_vector(qhat, u0: np.ndarray, max_iter: int = 300, tol: float = 1e-10):
    u = np.maximum(u0, 1e-300)
    u = u / u.max()
    lam = 0.0
    for _ in range(max_iter):
        w = qhat @ u
        top = w.max()
        if top <= 0:
            return 0.0, np.full_like(u, 1.0)
        w = w / top
        lam = top
        if np.max(np.abs(w - u)) < tol:
            u = w
            break
        u = w
    floor = 1e-14 * u.max()
    return lam, np.maximum(u, floor)


def _exact_lambda1(net, epi, rates, gamma1, upper):
    assembly = qmatrix.build_q(net, epi, rates.with_gamma1(gamma1), gamma1_upper=upper)
    return qmatrix.lambda1(assembly, net=net)


class _SgpModel:
    """Variable layout and constraint builder for one SGP iteration.

    Variables: gamma (N), u entries for compartments 1..4N-1 (order C1, C2,
    I1, I2; the first Perron-vector entry is pinned to one and eliminated),
    lambda. The zeta auxiliaries are substituted out exactly through the
    monomialized equality: zeta_i(gamma) = zeta_a * (gamma/gamma_a)^(-q_i)
    with q_i = gamma_a/zeta_a, which keeps every entry a monomial while
    shrinking the Newton systems. The shift psi_gp may exceed the analytic
    psi so that zeta stays strictly positive across the whole rate box.
    """

    def __init__(self, net: LayeredNetwork, epi: EpidemicParams, rates: ActivityRates,
                 cfg: SgpConfig, lo: np.ndarray, hi: np.ndarray):
        self.net = net
        self.epi = epi
        self.rates = rates
        self.cfg = cfg
        self.lo = lo
        self.hi = hi
        self.n = net.n
        self.n_vars = 5 * self.n
        self.i_gamma = np.arange(self.n)
        self.i_lam = 5 * self.n - 1
        psi_exact = qmatrix.psi_shift(epi, rates, gamma1_upper=hi)
        margin = max(0.1 * hi.max(), 1e-3)
        self.psi = max(psi_exact, epi.eta_prime + hi.max() + margin)
        if self.psi - epi.eta_prime <= 0:
            raise ParameterError("psi - eta_prime must be positive for the zeta substitution")
        self.a_rows = [np.flatnonzero(net.a[i]) for i in range(self.n)]
        self.b_rows = [np.flatnonzero(net.b_hat[i]) for i in range(self.n)]

    def u_var(self, comp: int) -> int | None:
        """Variable index of Perron entry `comp`; None for the pinned entry 0."""
        return None if comp == 0 else self.n + comp - 1

    def extract_u(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([[1.0], x[self.n: self.n + 4 * self.n - 1]])

    def assembly_at(self, gamma: np.ndarray) -> qmatrix.QAssembly:
        assembly = qmatrix.build_q(self.net, self.epi, self.rates.with_gamma1(gamma),
                                   gamma1_upper=self.hi)
        assembly.psi = self.psi
        return assembly

    def zeta_of(self, gamma: np.ndarray) -> np.ndarray:
        return self.psi - self.epi.eta_prime - gamma

    def _perron_terms(self, gamma_anchor: np.ndarray, zeta_anchor: np.ndarray):
        """Q-hat entries as monomial terms (coeff, powers-in-gamma) per row."""
        n = self.n
        epi = self.epi
        g2 = self.rates.gamma2
        kappa, kbar = epi.kappa, 1.0 - epi.kappa
        # condensation of gamma_i + gamma2_i around the anchor
        alpha1 = gamma_anchor / (gamma_anchor + g2)
        cond_coeff = (gamma_anchor + g2) / gamma_anchor ** alpha1
        # substituted zeta monomial: zeta_a * (gamma/gamma_a)^(-q)
        q_zeta = gamma_anchor / zeta_anchor
        zeta_coeff = zeta_anchor * gamma_anchor ** q_zeta
        d2_diag = self.psi - epi.eta_prime - g2
        d3_diag = self.psi - epi.delta - self.rates.gamma1_i
        d4_diag = self.psi - epi.delta - self.rates.gamma2_i
        if np.any(d2_diag < -1e-12) or np.any(d3_diag < -1e-12) or np.any(d4_diag < -1e-12):
            raise ParameterError("shift is below a removal rate; Q-hat would go negative")
        rows = []

        def u_c1(j): return j
        def u_c2(j): return n + j
        def u_i1(j): return 2 * n + j
        def u_i2(j): return 3 * n + j

        for i in range(n):
            a_nb = self.a_rows[i]
            b_nb = self.b_rows[i]
            a_ij = self.net.a[i, a_nb]
            bh_ij = self.net.b_hat[i, b_nb]
            # S1-weighted rows (C1 and I1 blocks): gamma2_i / (gamma_i + gamma2_i)
            s1_coeff = g2[i] / cond_coeff[i]
            # S2-weighted rows (C2 and I2 blocks): gamma_i / (gamma_i + gamma2_i)
            s2_coeff = 1.0 / cond_coeff[i]

            def neighbor_terms(scale_c, scale_i, weight, exponent, include_temporal):
                terms = []
                if scale_c > 0 or scale_i > 0:
                    for j, aij in zip(a_nb, a_ij):
                        base = weight * aij
                        if scale_c > 0:
                            terms.append((base * scale_c, exponent, u_c1(j)))
                            terms.append((base * scale_c, exponent, u_c2(j)))
                        if scale_i > 0:
                            terms.append((base * scale_i, exponent, u_i1(j)))
                            terms.append((base * scale_i, exponent, u_i2(j)))
                    if include_temporal:
                        for j, bij in zip(b_nb, bh_ij):
                            base = weight * bij
                            if scale_c > 0:
                                terms.append((base * scale_c, exponent, u_c2(j)))
                            if scale_i > 0:
                                terms.append((base * scale_i, exponent, u_i2(j)))
                return terms

            # terms are (coeff, gamma_i exponent, u compartment index or None)
            terms = neighbor_terms(kappa * epi.beta_c, kappa * epi.beta_i,
                                   s1_coeff, -alpha1[i], include_temporal=False)
            terms.append((g2[i], 0.0, u_c2(i)))
            terms.append((zeta_coeff[i], -q_zeta[i], u_c1(i)))
            rows.append((u_c1(i), i, terms))

            terms = neighbor_terms(kappa * epi.beta_c, kappa * epi.beta_i,
                                   s2_coeff, 1.0 - alpha1[i], include_temporal=True)
            terms.append((1.0, 1.0, u_c1(i)))
            if d2_diag[i] > 0:
                terms.append((d2_diag[i], 0.0, u_c2(i)))
            rows.append((u_c2(i), i, terms))

            terms = neighbor_terms(kbar * epi.beta_c, kbar * epi.beta_i,
                                   s1_coeff, -alpha1[i], include_temporal=False)
            terms.append((epi.eta, 0.0, u_c1(i)))
            if d3_diag[i] > 0:
                terms.append((d3_diag[i], 0.0, u_i1(i)))
            if self.rates.gamma2_i[i] > 0:
                terms.append((self.rates.gamma2_i[i], 0.0, u_i2(i)))
            rows.append((u_i1(i), i, terms))

            terms = neighbor_terms(kbar * epi.beta_c, kbar * epi.beta_i,
                                   s2_coeff, 1.0 - alpha1[i], include_temporal=True)
            terms.append((epi.eta, 0.0, u_c2(i)))
            if self.rates.gamma1_i[i] > 0:
                terms.append((self.rates.gamma1_i[i], 0.0, u_i1(i)))
            if d4_diag[i] > 0:
                terms.append((d4_diag[i], 0.0, u_i2(i)))
            rows.append((u_i2(i), i, terms))
        return rows

    def build_problem(self, gamma_anchor: np.ndarray, zeta_anchor: np.ndarray):
        nv = self.n_vars
        inequalities = []
        for u_row, node, entry_terms in self._perron_terms(gamma_anchor, zeta_anchor):
            terms = []
            row_var = self.u_var(u_row)
            for coeff, g_exp, u_comp in entry_terms:
                powers = {self.i_lam: -1.0}
                if g_exp != 0.0:
                    powers[self.i_gamma[node]] = g_exp
                u_j = self.u_var(u_comp)
                if u_j is not None:
                    powers[u_j] = powers.get(u_j, 0.0) + 1.0
                if row_var is not None:
                    powers[row_var] = powers.get(row_var, 0.0) - 1.0
                terms.append((coeff, powers))
            inequalities.append(Posynomial.from_terms(nv, terms))
        budget_terms = []
        for coeff, exponent in self.cfg.cost.term_list:
            for i in range(self.n):
                budget_terms.append((coeff / self.cfg.budget, {self.i_gamma[i]: exponent}))
        inequalities.append(Posynomial.from_terms(nv, budget_terms))
        objective = Posynomial.monomial(nv, 1.0, {self.i_lam: 1.0})
        problem = GpProblem(nv, objective, inequalities, [])

        tf = self.cfg.trust_factor
        # the zeta trust region maps through the substitution onto gamma
        inv_q = zeta_anchor / gamma_anchor
        lower = np.empty(nv)
        upper = np.empty(nv)
        lower[self.i_gamma] = np.maximum.reduce([
            self.lo, gamma_anchor / tf, gamma_anchor * tf ** (-inv_q)])
        upper[self.i_gamma] = np.minimum.reduce([
            self.hi, gamma_anchor * tf, gamma_anchor * tf ** inv_q])
        lower[self.n: self.i_lam] = 1.0 / self.cfg.u_box
        upper[self.n: self.i_lam] = self.cfg.u_box
        lower[self.i_lam] = 1e-12
        upper[self.i_lam] = 1e12
        return problem, lower, upper

    def start_point(self, gamma: np.ndarray, zeta: np.ndarray, u: np.ndarray) -> np.ndarray:
        qhat = self.assembly_at(gamma).qhat
        u = np.clip(u / u[0], 1e-9, 1e9)
        ratios = (qhat @ u) / u
        lam0 = float(ratios.max()) * (1.0 + 1e-4)
        x0 = np.empty(self.n_vars)
        x0[self.i_gamma] = gamma
        x0[self.n: self.i_lam] = u[1:]
        x0[self.i_lam] = lam0
        return x0


def _crossover_to_floor(net, epi, rates, cfg, lo, hi, gamma, lam):
    """Snap lambda-indifferent near-floor rates onto the floor.

    The barrier leaves rates whose objective sensitivity is below its
    accuracy strictly interior; an exact solver would park them on the
    bound. Candidates are snapped one at a time (lowest rate first), the
    extra spend is recovered by raising the largest free rates toward the
    ceiling, and a move is kept only when the exact spectral abscissa does
    not increase. Returns the (possibly unchanged) rates and abscissa.
    """
    cost = cfg.cost
    gamma = gamma.copy()
    order = np.argsort(gamma)
    candidates = [i for i in order
                  if lo[i] * 1.0001 < gamma[i] <= lo[i] * (1.0 + 0.5)]
    for i in candidates:
        trial = gamma.copy()
        deficit = float(cost.value(lo[i]) - cost.value(trial[i]))
        trial[i] = lo[i]
        # recover the extra spend from the highest rates first
        for j in np.argsort(-trial):
            if deficit <= 0:
                break
            if j == i or trial[j] >= hi[j] * (1 - 1e-12):
                continue
            headroom = float(cost.value(trial[j]) - cost.value(hi[j]))
            take = min(headroom, deficit)
            trial[j] = min(cost.rate_for_cost(float(cost.value(trial[j])) - take), hi[j])
            deficit -= take
        if deficit > 1e-9 * cfg.budget:
            continue
        if cost.total(trial) > cfg.budget * (1 + 1e-12):
            continue
        lam_trial = _exact_lambda1(net, epi, rates, trial, hi)
        if lam_trial <= lam:
            gamma, lam = trial, lam_trial
    return gamma, lam


def _uniform_budget_start(cfg: SgpConfig, lo: np.ndarray, hi: np.ndarray, n: int) -> np.ndarray:
    c = cfg.cost

    def total_at(g):
        return c.total(np.clip(np.full(n, g), lo, hi))

    g_lo, g_hi = lo.min(), hi.max()
    target = cfg.budget
    if total_at(g_hi) > target:
        raise ParameterError("infeasible budget (maximum rates still exceed it)")
    for _ in range(200):
        mid = np.sqrt(g_lo * g_hi)
        if total_at(mid) > target:
            g_lo = mid
        else:
            g_hi = mid
    gamma = np.clip(np.full(n, g_hi), lo, hi)
    # back off the budget boundary so the barrier starts strictly inside
    for _ in range(60):
        inside_box = np.clip(gamma * 1.001, lo * (1 + 1e-9), hi * (1 - 1e-9))
        if c.total(inside_box) < target * (1 - 1e-9):
            return inside_box
        gamma = inside_box
    return gamma


def sgp_optimize(
    net: LayeredNetwork,
    epi: EpidemicParams,
    rates: ActivityRates,
    cfg: SgpConfig,
) -> SgpResult:
    """Minimize the spectral abscissa over per-node activation rates.

    Iterates anchored geometric programs; reports the exact spectral
    abscissa of Q at each iterate (not the GP's surrogate), which is
    non-increasing along the run.
    """
    n = net.n
    lo, hi = cfg.bounds_for(n)
    min_spend = cfg.cost.total(hi)
    max_spend = cfg.cost.total(lo)
    if cfg.budget < min_spend * (1 - 1e-12):
        raise ParameterError(
            f"infeasible budget {cfg.budget:.6g}: cheapest allocation costs {min_spend:.6g}"
        )
    model = _SgpModel(net, epi, rates, cfg, lo, hi)
    if cfg.budget >= max_spend:
        gamma = lo.copy()
        lam = _exact_lambda1(net, epi, rates, gamma, hi)
        return SgpResult(gamma, lam, [lam], None, model.zeta_of(gamma), 0, True,
                         status="budget saturates the rate floor")
    if cfg.budget <= min_spend * (1 + 1e-9):
        gamma = hi.copy()
        lam = _exact_lambda1(net, epi, rates, gamma, hi)
        return SgpResult(gamma, lam, [lam], None, model.zeta_of(gamma), 0, True,
                         status="budget admits only the maximum rates")

    gamma = _uniform_budget_start(cfg, lo, hi, n)
    zeta = model.zeta_of(gamma)
    _, u = _perron_vector(model.assembly_at(gamma).qhat, np.ones(4 * n))
    lam = _exact_lambda1(net, epi, rates, gamma, hi)
    trace = [lam]
    best_gamma, best_lam, best_u = gamma.copy(), lam, u.copy()
    converged = False
    status = "ok"
    for iteration in range(1, cfg.max_iterations + 1):
        problem, lower, upper = model.build_problem(gamma, zeta)
        x0 = model.start_point(gamma, zeta, u)
        t0_barrier = 3e3 if iteration == 1 else 1e5
        try:
            result = gp_solve(problem, x0=x0, lower=lower, upper=upper,
                              tol_comp=cfg.gp_tol_comp, t0=t0_barrier)
        except GpError as exc:
            warnings.warn(f"geometric program failed at iteration {iteration}: {exc}; "
                          "returning best iterate so far")
            status = f"gp failure: {exc}"
            break
        gamma_new = result.x[model.i_gamma]
        # pull the iterate strictly inside the budget and box so the next
        # anchor is interior (optimal iterates saturate the budget)
        gamma_new = np.clip(gamma_new * (1.0 + 1e-6),
                            lo * (1.0 + 1e-12), hi * (1.0 - 1e-12))
        lam_new = _exact_lambda1(net, epi, rates, gamma_new, hi)
        if lam_new > trace[-1]:
            # descent failed within solver tolerance: keep the previous iterate
            converged = True
            break
        trace.append(lam_new)
        gamma = gamma_new
        u = model.extract_u(result.x)
        zeta = model.zeta_of(gamma)
        if np.any(zeta <= 0):
            status = "zeta left the positive domain"
            warnings.warn(status)
            break
        if lam_new < best_lam:
            best_gamma, best_lam, best_u = gamma.copy(), lam_new, u.copy()
        improvement = trace[-2] - trace[-1]
        if abs(improvement) < cfg.tol * max(1.0, abs(trace[-2])):
            converged = True
            break
    if cfg.crossover:
        polished, lam_polished = _crossover_to_floor(
            net, epi, rates, cfg, lo, hi, best_gamma, best_lam)
        if lam_polished <= best_lam:
            best_gamma, best_lam = polished, lam_polished
            trace.append(lam_polished)
    return SgpResult(
        gamma1=best_gamma,
        lam=best_lam,
        trace=trace,
        u=best_u,
        zeta=model.zeta_of(best_gamma),
        iterations=len(trace) - 1,
        converged=converged,
        status=status,
    )


def allocate_by_centrality(
    net: LayeredNetwork,
    rates: ActivityRates,
    cfg: SgpConfig,
    centrality: str = "degree",
) -> np.ndarray:
    """Greedy budget allocation in centrality order.

    Walks nodes from most to least central, granting the minimum rate
    (maximum spend) while the remaining budget still covers maximum rates
    for everyone left; the boundary node gets whatever rate exactly
    exhausts the budget.
    """
    n = net.n
    lo, hi = cfg.bounds_for(n)
    cost = cfg.cost
    if centrality == "degree":
        scores = net.average_degrees()
    elif centrality == "closeness":
        scores = closeness_centrality(net)
    else:
        raise ParameterError(f"unknown centrality {centrality!r}")
    if cfg.budget < cost.total(hi) * (1 - 1e-12):
        raise ParameterError("infeasible budget for centrality allocation")
    order = np.argsort(-scores, kind="stable")
    gamma = hi.copy()
    remaining = cfg.budget
    ceil_cost = cost.value(hi)
    suffix_min = np.concatenate([np.cumsum(ceil_cost[order][::-1])[::-1], [0.0]])
    for pos, i in enumerate(order):
        future = suffix_min[pos + 1]
        floor_cost = float(cost.value(lo[i]))
        if remaining - floor_cost >= future:
            gamma[i] = lo[i]
            remaining -= floor_cost
        else:
            spend = remaining - future
            rate = cost.rate_for_cost(spend)
            gamma[i] = float(np.clip(rate, lo[i], hi[i]))
            remaining -= float(cost.value(gamma[i]))
            break
    return gamma
