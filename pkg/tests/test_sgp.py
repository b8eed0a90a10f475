import numpy as np
import pytest

from scir import qmatrix, threshold
from scir.gp import Posynomial
from scir.netgen import LayeredNetwork, gen_erdos_renyi, gen_random_regular
from scir.params import ActivityRates, EpidemicParams, HomogeneousParams, ParameterError
from scir.sgp import (
    RECIPROCAL_COST,
    CostFamily,
    SgpConfig,
    allocate_by_centrality,
    monomial_approx,
    sgp_optimize,
    solve_homogeneous,
)

EPI = EpidemicParams(beta_c=0.15, beta_i=0.2, kappa=1.0, eta=0.56, eta_prime=0.8, delta=0.2)


def make_net(n=16, seed=0, d1=4, prob2=0.35, p=0.5):
    a = gen_random_regular(n, d1, seed=seed)
    b = gen_erdos_renyi(n, prob2, seed=seed + 1000)
    return LayeredNetwork(a=a, b=b, p=np.where(b > 0, p, 0.0))


def exact_lambda(net, epi, rates, gamma1, hi):
    asm = qmatrix.build_q(net, epi, rates.with_gamma1(gamma1),
                          gamma1_upper=np.full(net.n, hi))
    return qmatrix.lambda1(asm, net=net)


class TestCostFamily:
    def test_reciprocal(self):
        assert RECIPROCAL_COST.value(0.25) == pytest.approx(4.0)
        assert RECIPROCAL_COST.total([0.1, 0.2]) == pytest.approx(15.0)

    def test_rate_for_cost_inverts(self):
        cost = CostFamily(((2.0, -1.0), (0.5, -2.0)))
        for g in (0.08, 0.15, 0.3):
            assert cost.rate_for_cost(float(cost.value(g))) == pytest.approx(g, rel=1e-8)

    def test_positive_exponent_rejected(self):
        with pytest.raises(ParameterError):
            CostFamily(((1.0, 1.0),))


class TestMonomialApprox:
    def test_two_term_example(self):
        # gamma + 0.2 anchored at gamma = 0.2: equal weights, value 0.4
        posy = Posynomial.from_terms(1, [(1.0, {0: 1.0}), (0.2, {})])
        anchor = np.array([0.2])
        monomial = monomial_approx(posy, anchor)
        assert monomial.is_monomial()
        assert monomial.value(anchor) == pytest.approx(0.4)
        exponent = monomial.exponents[0][list(monomial.support).index(0)]
        assert exponent == pytest.approx(0.5)
        probe = np.array([0.37])
        assert monomial.value(probe) == pytest.approx(0.4 * (0.37 / 0.2) ** 0.5)

    def test_single_term_identity(self):
        posy = Posynomial.from_terms(2, [(2.5, {0: 1.0, 1: -0.5})])
        anchor = np.array([0.7, 1.3])
        monomial = monomial_approx(posy, anchor)
        for x in (np.array([0.2, 0.4]), np.array([3.0, 0.9])):
            assert monomial.value(x) == pytest.approx(posy.value(x), rel=1e-12)

    def test_am_gm_two_variables(self):
        posy = Posynomial.from_terms(2, [(1.0, {0: 1.0}), (1.0, {1: 1.0})])
        anchor = np.array([1.0, 1.0])
        monomial = monomial_approx(posy, anchor)
        probe = np.array([2.0, 0.3])
        assert monomial.value(probe) == pytest.approx(2 * np.sqrt(2.0 * 0.3))
        assert monomial.value(anchor) == pytest.approx(2.0)

    def test_under_approximation_property(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            nv = int(rng.integers(1, 4))
            terms = []
            for _ in range(int(rng.integers(1, 4))):
                powers = {int(j): float(rng.uniform(-2, 2)) for j in range(nv)
                          if rng.random() < 0.7}
                terms.append((float(rng.uniform(0.1, 3.0)), powers))
            posy = Posynomial.from_terms(nv, terms)
            anchor = rng.uniform(0.1, 3.0, nv)
            probe = rng.uniform(0.1, 3.0, nv)
            monomial = monomial_approx(posy, anchor)
            assert monomial.value(anchor) == pytest.approx(posy.value(anchor), rel=1e-12)
            assert monomial.value(probe) <= posy.value(probe) * (1 + 1e-12)


class TestSolveHomogeneous:
    def hp(self):
        return HomogeneousParams(EPI, 4, 10, 0.3, 0.2, 0.2, 0.0, 0.2)

    def test_unlimited_budget_hits_floor(self):
        gamma, rho = solve_homogeneous(self.hp(), n=100, budget=1e9, lo=0.08, hi=0.3)
        assert gamma == pytest.approx(0.08, abs=1e-6)
        # the reproduction number rises with activity, so the floor is optimal
        sweep = [threshold.r0(self.hp().with_gamma1(g)) for g in np.linspace(0.08, 0.3, 9)]
        assert all(b >= a - 1e-12 for a, b in zip(sweep, sweep[1:]))
        assert rho == pytest.approx(min(sweep), abs=1e-6)

    def test_exact_budget_forces_ceiling(self):
        n = 100
        gamma, _ = solve_homogeneous(self.hp(), n=n, budget=n / 0.3, lo=0.08, hi=0.3)
        assert gamma == pytest.approx(0.3, abs=1e-9)

    def test_budget_floor_binds(self):
        n = 100
        gamma, _ = solve_homogeneous(self.hp(), n=n, budget=n / 0.15, lo=0.08, hi=0.3)
        assert gamma == pytest.approx(0.15, abs=1e-6)

    def test_infeasible_budget_rejected(self):
        with pytest.raises(ParameterError):
            solve_homogeneous(self.hp(), n=100, budget=100 / 0.5, lo=0.08, hi=0.3)

    def test_case_i_still_returns_minimizer(self):
        epi = EpidemicParams(0.1, 0.2, 1.0, 0.56, 0.8, 1.5)
        hp = HomogeneousParams(epi, 3, 6, 0.3, 0.2, 0.2, 0.0, 1.0)
        assert threshold.classify_stability(hp).case == "I"
        gamma, rho = solve_homogeneous(hp, n=50, budget=50 / 0.1, lo=0.08, hi=0.3)
        assert gamma == pytest.approx(0.1, abs=1e-6)
        assert rho < 1


class TestCentralityAllocation:
    def test_budget_ceiling_everyone_max(self):
        net = make_net()
        rates = ActivityRates.uniform(net.n, 0.2, 0.2, 0.2, 0.2)
        cfg = SgpConfig(budget=net.n / 0.3, lower=np.full(net.n, 0.08),
                        upper=np.full(net.n, 0.3))
        for policy in ("degree", "closeness"):
            gamma = allocate_by_centrality(net, rates, cfg, policy)
            assert np.allclose(gamma, 0.3)

    def test_star_hub_first(self):
        n = 6
        a = np.zeros((n, n))
        for j in range(1, n):
            a[0, j] = a[j, 0] = 1.0
        net = LayeredNetwork(a=a, b=np.zeros((n, n)), p=np.zeros((n, n)))
        rates = ActivityRates.uniform(n, 0.2, 0.2, 0.2, 0.2)
        lo, hi = 0.08, 0.3
        budget = 1 / lo + (n - 1) / hi  # exactly one node at the floor
        cfg = SgpConfig(budget=budget, lower=np.full(n, lo), upper=np.full(n, hi))
        gamma = allocate_by_centrality(net, rates, cfg, "degree")
        assert gamma[0] == pytest.approx(lo)
        assert np.allclose(gamma[1:], hi)

    def test_path_closeness_prefers_middle(self):
        n = 3
        a = np.zeros((n, n))
        a[0, 1] = a[1, 0] = a[1, 2] = a[2, 1] = 1.0
        net = LayeredNetwork(a=a, b=np.zeros((n, n)), p=np.zeros((n, n)))
        rates = ActivityRates.uniform(n, 0.2, 0.2, 0.2, 0.2)
        lo, hi = 0.08, 0.3
        cfg = SgpConfig(budget=1 / lo + 2 / hi, lower=np.full(n, lo), upper=np.full(n, hi))
        gamma = allocate_by_centrality(net, rates, cfg, "closeness")
        assert gamma[1] == pytest.approx(lo)
        assert gamma[0] == pytest.approx(hi) and gamma[2] == pytest.approx(hi)

    def test_budget_never_exceeded(self):
        rng = np.random.default_rng(1)
        net = make_net(20, seed=4)
        rates = ActivityRates.uniform(net.n, 0.2, 0.2, 0.2, 0.2)
        lo, hi = 0.08, 0.3
        for _ in range(10):
            budget = float(rng.uniform(net.n / hi, net.n / lo))
            cfg = SgpConfig(budget=budget, lower=np.full(net.n, lo), upper=np.full(net.n, hi))
            for policy in ("degree", "closeness"):
                gamma = allocate_by_centrality(net, rates, cfg, policy)
                assert RECIPROCAL_COST.total(gamma) <= budget * (1 + 1e-9)
                assert np.all(gamma >= lo - 1e-12) and np.all(gamma <= hi + 1e-12)


class TestSgpOptimize:
    def setup_method(self):
        self.net = make_net(16, seed=2)
        self.rates = ActivityRates.uniform(self.net.n, 0.2, 0.2, 0.2, 0.2)
        self.lo, self.hi = 0.08, 0.3

    def cfg(self, budget):
        n = self.net.n
        return SgpConfig(budget=budget, lower=np.full(n, self.lo),
                         upper=np.full(n, self.hi))

    def test_minimum_budget_pins_ceiling(self):
        res = sgp_optimize(self.net, EPI, self.rates, self.cfg(self.net.n / self.hi))
        assert np.allclose(res.gamma1, self.hi)
        assert res.iterations <= 2
        assert res.lam == pytest.approx(
            exact_lambda(self.net, EPI, self.rates, np.full(self.net.n, self.hi), self.hi),
            abs=1e-9)

    def test_maximum_budget_hits_floor(self):
        res = sgp_optimize(self.net, EPI, self.rates, self.cfg(self.net.n / self.lo))
        assert np.allclose(res.gamma1, self.lo)

    def test_interior_budget_descends_and_dominates(self):
        budget = 0.5 * (self.net.n / self.hi + self.net.n / self.lo)
        cfg = self.cfg(budget)
        res = sgp_optimize(self.net, EPI, self.rates, cfg)
        assert all(res.trace[k + 1] <= res.trace[k] + 1e-8
                   for k in range(len(res.trace) - 1))
        assert RECIPROCAL_COST.total(res.gamma1) <= budget * (1 + 1e-6)
        assert np.all(res.gamma1 >= self.lo - 1e-9)
        assert np.all(res.gamma1 <= self.hi + 1e-9)
        for policy in ("degree", "closeness"):
            gamma = allocate_by_centrality(self.net, self.rates, cfg, policy)
            assert res.lam <= exact_lambda(self.net, EPI, self.rates, gamma, self.hi) + 1e-9

    def test_infeasible_budget_rejected(self):
        with pytest.raises(ParameterError):
            sgp_optimize(self.net, EPI, self.rates, self.cfg(self.net.n / self.hi * 0.5))

    def test_brute_force_near_optimality(self):
        # exhaustive grid oracle at four nodes
        rng = np.random.default_rng(0)
        n = 4
        for trial in range(3):
            a = gen_erdos_renyi(n, 0.8, seed=trial)
            b = gen_erdos_renyi(n, 0.8, seed=trial + 50)
            net = LayeredNetwork(a=a, b=b, p=np.where(b > 0, 0.6, 0.0))
            rates = ActivityRates.uniform(n, 0.2, 0.2, 0.2, 0.2)
            lo, hi = 0.08, 0.3
            budget = float(rng.uniform(n / hi * 1.15, n / lo * 0.85))
            cfg = SgpConfig(budget=budget, lower=np.full(n, lo), upper=np.full(n, hi))
            res = sgp_optimize(net, EPI, rates, cfg)
            levels = np.linspace(lo, hi, 5)
            best = np.inf
            for combo in np.stack(np.meshgrid(*[levels] * n), -1).reshape(-1, n):
                if RECIPROCAL_COST.total(combo) <= budget:
                    best = min(best, exact_lambda(net, EPI, rates, combo, hi))
            assert res.lam <= best + 1e-3
