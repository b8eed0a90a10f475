import numpy as np
import pytest

from scir.gp import GpError, GpProblem, Posynomial, gp_solve


def mono(n, coeff, powers):
    return Posynomial.monomial(n, coeff, powers)


class TestPosynomial:
    def test_value(self):
        posy = Posynomial.from_terms(2, [(2.0, {0: 1.0}), (3.0, {1: -1.0})])
        assert posy.value(np.array([2.0, 3.0])) == pytest.approx(2 * 2 + 3 / 3)

    def test_nonpositive_coefficients_rejected(self):
        with pytest.raises(GpError):
            Posynomial.from_terms(1, [(-1.0, {0: 1.0})])

    def test_terms_round_trip(self):
        posy = Posynomial.from_terms(3, [(2.0, {0: 1.0, 2: -0.5}), (1.0, {1: 2.0})])
        terms = list(posy.terms())
        assert terms[0] == (2.0, {0: 1.0, 2: -0.5})
        assert terms[1] == (1.0, {1: 2.0})


class TestAnalyticCases:
    def test_tight_reciprocal_constraint(self):
        problem = GpProblem(1, mono(1, 1.0, {0: 1.0}), [mono(1, 1.0, {0: -1.0})])
        res = gp_solve(problem, lower=[0.1], upper=[10.0])
        assert res.x[0] == pytest.approx(1.0, abs=1e-6)
        assert res.kkt_residual < 1e-6

    def test_am_gm_optimum(self):
        problem = GpProblem(
            2, Posynomial.from_terms(2, [(1.0, {0: 1.0}), (1.0, {1: 1.0})]),
            [mono(2, 1.0, {0: -1.0, 1: -1.0})])
        res = gp_solve(problem)
        assert np.allclose(res.x, 1.0, atol=1e-6)
        assert res.objective == pytest.approx(2.0, abs=1e-6)
        assert res.kkt_residual < 1e-6

    def test_linear_boundary(self):
        # the spec's "minimize x subject to 2x <= 1" example is unbounded as
        # written (x can shrink freely); driving x upward against the linear
        # boundary is the well-posed reading and lands on x = 0.5
        problem = GpProblem(1, mono(1, 1.0, {0: -1.0}), [mono(1, 2.0, {0: 1.0})])
        res = gp_solve(problem)
        assert res.x[0] == pytest.approx(0.5, abs=1e-6)
        assert res.kkt_residual < 1e-6

    def test_monomial_equality(self):
        # minimize x*y subject to x*y^2 = 8 with x >= 0.1: optimum at x = 0.1
        problem = GpProblem(2, mono(2, 1.0, {0: 1.0, 1: 1.0}), [],
                            [(mono(2, 1.0, {0: 1.0, 1: 2.0}), 8.0)])
        res = gp_solve(problem, lower=[0.1, 0.1], upper=[100.0, 100.0])
        assert res.x[0] == pytest.approx(0.1, rel=1e-5)
        assert res.x[0] * res.x[1] ** 2 == pytest.approx(8.0, rel=1e-8)


class TestRandomProblems:
    def test_kkt_residuals(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            nv = int(rng.integers(2, 6))
            obj = Posynomial.from_terms(
                nv, [(float(rng.uniform(0.5, 2.0)), {j: float(rng.uniform(0.2, 1.5))})
                     for j in range(nv)])
            constraints = []
            for _ in range(int(rng.integers(1, 4))):
                terms = []
                for _ in range(int(rng.integers(1, 4))):
                    powers = {int(j): float(rng.uniform(-1.5, -0.1))
                              for j in rng.choice(nv, size=min(nv, 2), replace=False)}
                    terms.append((float(rng.uniform(0.2, 1.0)), powers))
                constraints.append(Posynomial.from_terms(nv, terms))
            problem = GpProblem(nv, obj, constraints)
            res = gp_solve(problem, lower=np.full(nv, 1e-3), upper=np.full(nv, 1e3))
            assert res.kkt_residual < 1e-6

    def test_warm_start_agrees_with_cold(self):
        problem = GpProblem(
            2, Posynomial.from_terms(2, [(1.0, {0: 1.0}), (2.0, {1: 1.0})]),
            [mono(2, 1.5, {0: -1.0, 1: -1.0})])
        cold = gp_solve(problem)
        warm = gp_solve(problem, x0=cold.x * 1.1, t0=1e3)
        assert np.allclose(cold.x, warm.x, rtol=1e-5)


class TestFailures:
    def test_infeasible(self):
        # x <= 0.5 and x >= 2 cannot hold together
        problem = GpProblem(1, mono(1, 1.0, {0: 1.0}),
                            [mono(1, 2.0, {0: 1.0}), mono(1, 2.0, {0: -1.0})])
        with pytest.raises(GpError):
            gp_solve(problem)

    def test_unbounded(self):
        problem = GpProblem(1, mono(1, 1.0, {0: 1.0}), [])
        with pytest.raises(GpError):
            gp_solve(problem)

    def test_posynomial_equality_rejected(self):
        two_terms = Posynomial.from_terms(1, [(1.0, {0: 1.0}), (1.0, {0: 2.0})])
        problem = GpProblem(1, mono(1, 1.0, {0: 1.0}), [], [(two_terms, 1.0)])
        with pytest.raises(GpError):
            gp_solve(problem)

    def test_inconsistent_equalities(self):
        problem = GpProblem(1, mono(1, 1.0, {0: 1.0}), [],
                            [(mono(1, 1.0, {0: 1.0}), 2.0),
                             (mono(1, 1.0, {0: 1.0}), 3.0)])
        with pytest.raises(GpError):
            gp_solve(problem)
