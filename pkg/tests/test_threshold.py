import numpy as np
import pytest

from scir import threshold
from scir.params import EpidemicParams, HomogeneousParams

TABLE1 = EpidemicParams(beta_c=0.1, beta_i=0.2, kappa=1.0, eta=0.56, eta_prime=0.8, delta=1.5)


def table1_hp(d1=4, d2=50, p=0.3, gamma1=0.2, gamma2=0.2, gamma1_i=0.0, gamma2_i=0.2,
              kappa=1.0):
    epi = EpidemicParams(0.1, 0.2, kappa, 0.56, 0.8, 1.5)
    return HomogeneousParams(epi, d1, d2, p, gamma1, gamma2, gamma1_i, gamma2_i)


def random_hp(rng, kappa=None):
    eta = rng.uniform(0.05, 1.0)
    epi = EpidemicParams(
        beta_c=rng.uniform(0.01, 0.5),
        beta_i=rng.uniform(0.01, 0.5),
        kappa=rng.uniform(0.0, 1.0) if kappa is None else kappa,
        eta=eta,
        eta_prime=eta + rng.uniform(0.01, 1.0),
        delta=rng.uniform(0.1, 2.0),
    )
    return HomogeneousParams(
        epi, int(rng.integers(1, 8)), int(rng.integers(2, 60)), rng.uniform(0.05, 1.0),
        rng.uniform(0.01, 2.0), rng.uniform(0.01, 2.0), rng.uniform(0.0, 2.0),
        rng.uniform(0.0, 2.0),
    )


class TestComponents:
    def test_r01_table1(self):
        r01, _ = threshold.r0_components(table1_hp())
        assert r01 == pytest.approx(4 * (0.1 / 0.8 + 0.56 * 0.2 / (0.8 * 1.5)), abs=1e-12)
        assert r01 == pytest.approx(0.873333333, abs=1e-8)

    def test_layer2_disabled(self):
        for hp in (table1_hp(p=0.0), table1_hp(d2=0)):
            assert threshold.r0_components(hp)[1] == 0.0

    def test_tilde_reduces_at_kappa_one(self):
        hp = table1_hp()
        assert threshold.tilde_components(hp) == pytest.approx(threshold.r0_components(hp))

    def test_tilde_formula(self):
        hp = table1_hp(kappa=0.6)
        r01, r02 = threshold.r0_components(hp)
        rt1, rt2 = threshold.tilde_components(hp)
        e = hp.epi
        assert rt1 == pytest.approx(0.6 * r01 + 0.4 * hp.d1 * e.beta_i / e.delta)
        expected2 = 0.6 * r02 + 0.4 * hp.p * hp.d2 * (e.delta + hp.gamma1_i) * e.beta_i / (
            e.delta * (e.delta + hp.gamma1_i + hp.gamma2_i))
        assert rt2 == pytest.approx(expected2)


class TestBuildNgm:
    def test_no_activation_zeroes_second_row(self):
        ngm = threshold.build_ngm(table1_hp(gamma1=0.0))
        assert np.allclose(ngm.f1[1], 0.0)
        assert np.allclose(ngm.f1[0], [4.0, 4.0])

    def test_no_infected_contribution(self):
        hp = table1_hp()
        epi = EpidemicParams(0.1, 0.0, 1.0, 0.56, 0.8, 1.5)
        # beta_i = 0 disables the infected route entirely
        hp0 = HomogeneousParams(epi, hp.d1, hp.d2, hp.p, hp.gamma1, hp.gamma2,
                                hp.gamma1_i, hp.gamma2_i)
        ngm = threshold.build_ngm(hp0)
        expected = 0.1 * ngm.f1 @ np.linalg.inv(ngm.v1)
        assert np.allclose(ngm.l, expected, atol=1e-14)

    def test_matrix_vs_brute_force_4x4(self):
        rng = np.random.default_rng(11)
        for _ in range(50)               :
            hp = random_hp(rng)
            reduced = hp.epi.kappa * threshold.build_ngm(hp).l \
                + (1 - hp.epi.kappa) * threshold.build_ngm(hp).u
            rho_reduced = max(abs(np.linalg.eigvals(reduced)))
            rho_full = max(abs(np.linalg.eigvals(threshold.full_ngm_4x4(hp))))
            assert rho_reduced == pytest.approx(rho_full, abs=1e-10)


class TestClosedForm:
    def test_matches_dense_eigensolver(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            hp = random_hp(rng)
            assert threshold.rho_closed_form(hp) == pytest.approx(
                threshold.rho_dense(hp), abs=1e-10)

    def test_layer2_off_gives_r01(self):
        hp = table1_hp(p=0.0)
        r01, _ = threshold.r0_components(hp)
        assert threshold.rho_closed_form(hp) == pytest.approx(r01, abs=1e-12)

    def test_gamma1_zero_gives_r01(self):
        hp = table1_hp(gamma1=0.0)
        r01, _ = threshold.r0_components(hp)
        assert threshold.rho_closed_form(hp) == pytest.approx(r01, abs=1e-12)

    def test_discriminant_nonnegative(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            hp = random_hp(rng)
            assert threshold.discriminant(hp) >= -1e-12
            hp1 = random_hp(rng, kappa=1.0)
            assert threshold.discriminant(hp1) >= -1e-12

    def test_z_ordering(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            z1, z2 = threshold.z_pair(random_hp(rng))
            assert z1 >= z2 - 1e-12


class TestR0:
    def test_kappa_one_equals_original(self):
        hp = table1_hp()
        ngm = threshold.build_ngm(hp)
        assert threshold.r0(hp) == pytest.approx(max(abs(np.linalg.eigvals(ngm.l))),
                                                 abs=1e-12)

    def test_kappa_direction_depends_on_beta_c(self):
        # low carrier transmissions: more carriers lowers r0; high: raises it
        def r0_at(beta_c, kappa):
            epi = EpidemicParams(beta_c, 0.2, kappa, 0.56, 0.8, 1.5)
            return threshold.r0(HomogeneousParams(epi, 4, 50, 0.3, 0.2, 0.2, 0.0, 0.2))

        lo = [r0_at(0.02, k) for k in (0.2, 0.5, 0.8)]
        hi = [r0_at(0.2, k) for k in (0.2, 0.5, 0.8)]
        assert lo[0] > lo[1] > lo[2]
        assert hi[0] < hi[1] < hi[2]

    def test_reduction_matches_block_matrix(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            hp = random_hp(rng)
            ngm = threshold.build_ngm(hp)
            kappa = hp.epi.kappa
            block = np.block([
                [kappa * ngm.l, kappa * ngm.u],
                [(1 - kappa) * ngm.l, (1 - kappa) * ngm.u],
            ])
            assert threshold.r0(hp) == pytest.approx(
                max(abs(np.linalg.eigvals(block))), abs=1e-10)


class TestClassification:
    def test_case_i_example(self):
        rep = threshold.classify_stability(table1_hp(d1=3, d2=6, gamma2_i=1.0))
        assert rep.case == "I"
        assert rep.r0_1 == pytest.approx(0.655, abs=5e-4)
        assert rep.r0_1 + rep.r0_2 == pytest.approx(0.9808, abs=5e-4)
        assert rep.gamma1_star is None

    def test_case_iii_example(self):
        rep = threshold.classify_stability(table1_hp(d1=3, d2=12, gamma2_i=1.0))
        assert rep.case == "III"
        assert rep.r0_1 == pytest.approx(0.655, abs=5e-4)
        assert rep.r0_1 + rep.r0_2 == pytest.approx(1.3066, abs=5e-4)
        assert rep.gamma1_star is not None and rep.gamma1_star > 0

    def test_case_ii_when_first_component_large(self):
        rep = threshold.classify_stability(table1_hp(d1=8, d2=12, gamma2_i=1.0))
        assert rep.r0_1 > 1
        assert rep.case == "II"

    def test_case_iii_bracketing(self):
        hp = table1_hp(d1=3, d2=12, gamma2_i=1.0)
        star = threshold.gamma1_star(hp)
        assert threshold.r0(hp.with_gamma1(star - 1e-4)) < 1
        assert threshold.r0(hp.with_gamma1(star + 1e-4)) > 1

    def test_case_ii_r0_dominates_r01(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            hp = random_hp(rng, kappa=1.0)
            r01, _ = threshold.r0_components(hp)
            assert threshold.r0(hp) >= r01 - 1e-10


class TestCubic:
    def test_root_residual(self):
        hp = table1_hp(d1=3, d2=12, gamma2_i=1.0)
        star = threshold.gamma1_star(hp)
        a, b, c, d = threshold.case3_cubic_coeffs(hp)
        residual = a * star**3 + b * star**2 + c * star + d
        assert abs(residual) < 1e-8

    def test_reduces_to_published_form_when_gamma1_i_zero(self):
        # with no infected activation the q-term collapses to eta' * R0^(2)
        hp = table1_hp(d1=3, d2=12, gamma1_i=0.0, gamma2_i=1.0)
        r01, r02 = threshold.r0_components(hp)
        g2, etap = hp.gamma2, hp.epi.eta_prime
        a, b, c, d = threshold.case3_cubic_coeffs(hp)
        assert a == pytest.approx(r01 + r02 - 1, abs=1e-12)
        assert b == pytest.approx(etap * (r01 + r02 - 1) + g2 * (3 * r01 + r02 - 3), abs=1e-12)
        assert c == pytest.approx(g2 * (r01 - 1) * (2 * etap + 3 * g2 - etap * r02), abs=1e-12)
        assert d == pytest.approx(g2**2 * (r01 - 1) * (etap + g2), abs=1e-12)

    def test_general_gamma1_i_residual(self):
        rng = np.random.default_rng(23)
        checked = 0
        while checked < 10:
            hp = random_hp(rng, kappa=1.0)
            rep = threshold.classify_stability(hp)
            if rep.case != "III":
                continue
            a, b, c, d = threshold.case3_cubic_coeffs(hp)
            star = rep.gamma1_star
            assert abs(a * star**3 + b * star**2 + c * star + d) < 1e-8
            checked += 1
