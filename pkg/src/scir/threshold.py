"""Next-generation-matrix thresholds for the homogeneous two-layer SCIR model.

Everything here is closed-form 2x2 algebra: the reproduction number splits
into a static-layer component and a temporal-layer component, and the
spectral radius has an explicit trace/determinant expression whose
discriminant is provably non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import HomogeneousParams, ParameterError


@dataclass(frozen=True)
class NgmMatrices:
    """2x2 building blocks of the next-generation matrix at the disease-free state."""

    f1: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    l: np.ndarray
    u: np.ndarray


@dataclass(frozen=True)
class ThresholdReport:
    r0: float
    r0_1: float
    r0_2: float
    case: str
    gamma1_star: float | None
    trace: float
    det: float
    discriminant: float
    kappa: float

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "r0_1": self.r0_1,
            "r0_2": self.r0_2,
            "case": self.case,
            "gamma1_star": self.gamma1_star,
            "trace": self.trace,
            "det": self.det,
            "discriminant": self.discriminant,
            "kappa": self.kappa,
        }


def _inv2(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det == 0:
        raise ParameterError("singular 2x2 transfer matrix (eta_prime or delta is zero)")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def build_ngm(hp: HomogeneousParams) -> NgmMatrices:
    """Assemble F1, V1, V2 and the reduced matrices L and U at the DFE."""
    e = hp.epi
    s1, s2 = hp.s1, hp.s2
    f1 = np.array([
        [hp.d1 * s1, hp.d1 * s1],
        [hp.d1 * s2, (hp.p * hp.d2 + hp.d1) * s2],
    ])
    v1 = np.array([
        [hp.gamma1 + e.eta_prime, -hp.gamma2],
        [-hp.gamma1, hp.gamma2 + e.eta_prime],
    ])
    v2 = np.array([
        [hp.gamma1_i + e.delta, -hp.gamma2_i],
        [-hp.gamma1_i, hp.gamma2_i + e.delta],
    ])
    v2_inv = _inv2(v2)
    l = f1 @ (e.beta_c * np.eye(2) + e.eta * e.beta_i * v2_inv) @ _inv2(v1)
    u = e.beta_i * f1 @ v2_inv
    return NgmMatrices(f1=f1, v1=v1, v2=v2, l=l, u=u)


def r0_components(hp: HomogeneousParams) -> tuple[float, float]:
    """Layer-wise component thresholds of the original (kappa=1) model."""
    e = hp.epi
    r01 = hp.d1 * (e.beta_c / e.eta_prime + e.eta * e.beta_i / (e.eta_prime * e.delta))
    r02 = hp.p * hp.d2 * (
        e.beta_c / e.eta_prime
        + e.eta * (e.delta + hp.gamma1_i) * e.beta_i
        / (e.eta_prime * e.delta * (e.delta + hp.gamma1_i + hp.gamma2_i))
    )
    return r01, r02


def tilde_components(hp: HomogeneousParams) -> tuple[float, float]:
    """Component thresholds generalized to kappa < 1."""
    e = hp.epi
    r01, r02 = r0_components(hp)
    kbar = 1.0 - e.kappa
    rt1 = e.kappa * r01 + kbar * hp.d1 * e.beta_i / e.delta
    rt2 = e.kappa * r02 + kbar * hp.p * hp.d2 * (e.delta + hp.gamma1_i) * e.beta_i / (
        e.delta * (e.delta + hp.gamma1_i + hp.gamma2_i)
    )
    return rt1, rt2


def effective_components(hp: HomogeneousParams) -> tuple[float, float]:
    if hp.epi.kappa == 1.0:
        return r0_components(hp)
    return tilde_components(hp)


def _w(hp: HomogeneousParams) -> float:
    e = hp.epi
    return e.beta_c / e.eta + e.beta_i / (e.delta + hp.gamma1_i + hp.gamma2_i)


def z_pair(hp: HomogeneousParams) -> tuple[float, float]:
    """The (z1, z2) pair whose ordering z1 >= z2 guarantees a real spectrum."""
    e = hp.epi
    kappa, kbar = e.kappa, 1.0 - e.kappa
    w = _w(hp)
    _, rt2 = effective_components(hp)
    denom = e.eta_prime + hp.gamma1 + hp.gamma2
    z1 = rt2 - kappa * hp.p * hp.d2 * e.eta * hp.gamma2 * w / (e.eta_prime * denom)
    z2 = kappa * hp.p * hp.d2 * e.eta * w / denom + kbar * hp.p * hp.d2 * e.beta_i / (
        e.delta + hp.gamma1_i + hp.gamma2_i
    )
    return z1, z2


def trace_det_closed_form(hp: HomogeneousParams) -> tuple[float, float]:
    """Trace and determinant of the reduced NGM via the z-variable expressions.

    Covers both the original model (kappa=1, matrix L) and the extended one
    (kappa<1, matrix kappa*L + (1-kappa)*U).
    """
    rt1, _ = effective_components(hp)
    z1, z2 = z_pair(hp)
    trace = rt1 + hp.s2 * z1
    det = hp.s1 * hp.s2 * rt1 * z2
    return trace, det


def discriminant(hp: HomogeneousParams) -> float:
    trace, det = trace_det_closed_form(hp)
    return trace * trace - 4.0 * det


def rho_closed_form(hp: HomogeneousParams) -> float:
    """Spectral radius as (trace + sqrt(discriminant)) / 2.

    A discriminant below -1e-9 would contradict the model's realness
    guarantee and indicates an implementation fault, so it raises.
    """
    trace, det = trace_det_closed_form(hp)
    disc = trace * trace - 4.0 * det
    if disc < -1e-9:
        raise ArithmeticError(f"negative discriminant {disc}: closed form is inconsistent")
    if trace == 0.0 and det == 0.0:
        return 0.0
    return (trace + math.sqrt(max(disc, 0.0))) / 2.0


def rho_dense(hp: HomogeneousParams) -> float:
    """Spectral radius from a dense eigen-decomposition of the reduced NGM."""
    ngm = build_ngm(hp)
    kappa = hp.epi.kappa
    m = kappa * ngm.l + (1.0 - kappa) * ngm.u
    return float(max(abs(np.linalg.eigvals(m))))


def r0(hp: HomogeneousParams) -> float:
    """Basic reproduction number of the homogeneous model."""
    return rho_closed_form(hp)


def full_ngm_4x4(hp: HomogeneousParams) -> np.ndarray:
    """The unreduced 4x4 product F V^-1 over compartments (C1, C2, I1, I2)."""
    e = hp.epi
    ngm = build_ngm(hp)
    kappa, kbar = e.kappa, 1.0 - e.kappa
    f4 = np.block([
        [kappa * e.beta_c * ngm.f1, kappa * e.beta_i * ngm.f1],
        [kbar * e.beta_c * ngm.f1, kbar * e.beta_i * ngm.f1],
    ])
    v4 = np.block([
        [ngm.v1, np.zeros((2, 2))],
        [-e.eta * np.eye(2), ngm.v2],
    ])
    return f4 @ np.linalg.inv(v4)


def case3_cubic_coeffs(hp: HomogeneousParams) -> tuple[float, float, float, float]:
    """Coefficients of the cubic in gamma1 whose positive root is the critical rate.

    Derived by clearing denominators in trace - det = 1. Only valid for the
    original model (kappa=1).
    """
    if hp.epi.kappa != 1.0:
        raise ParameterError("the critical-rate cubic applies to the original model (kappa=1)")
    e = hp.epi
    r01, r02 = r0_components(hp)
    g2, etap = hp.gamma2, e.eta_prime
    q = hp.p * hp.d2 * e.eta * _w(hp)
    a = r01 + r02 - 1.0
    b = etap * (r01 + r02 - 1.0) + g2 * (3.0 * r01 + 2.0 * r02 - 3.0) - q * g2 / etap
    c = g2 * (
        etap * (2.0 * r01 + r02 - 2.0)
        + g2 * (3.0 * r01 + r02 - 3.0)
        - q * (r01 * etap + g2) / etap
    )
    d = g2 * g2 * (r01 - 1.0) * (etap + g2)
    return a, b, c, d


def gamma1_star(hp: HomogeneousParams, tol: float = 1e-12) -> float:
    """Critical activation rate where r0 crosses 1, found by bisection.

    Assumes the conditional-stability regime (component threshold below 1,
    combined above 1), where r0 is below 1 at gamma1 -> 0 and above 1 as
    gamma1 grows.
    """
    f = lambda g1: r0(hp.with_gamma1(g1)) - 1.0
    lo = 0.0
    if f(lo) >= 0:
        raise ParameterError("r0 >= 1 already at gamma1 = 0; no positive critical rate")
    hi = max(1.0, hp.gamma2)
    expansions = 0
    while f(hi) < 0:
        hi *= 2.0
        expansions += 1
        if expansions > 60:
            raise ParameterError("r0 never exceeds 1; not the conditional regime")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def classify_stability(hp: HomogeneousParams) -> ThresholdReport:
    """Stability case of the disease-free equilibrium as gamma1 varies.

    Case I: stable for every gamma1. Case II: unstable for every gamma1.
    Case III: stable exactly below a finite critical rate, which is reported.
    """
    r1, r2 = effective_components(hp)
    trace, det = trace_det_closed_form(hp)
    disc = trace * trace - 4.0 * det
    rep = dict(
        r0=rho_closed_form(hp), r0_1=r1, r0_2=r2,
        trace=trace, det=det, discriminant=disc, kappa=hp.epi.kappa,
    )
    if r1 >= 1.0:
        return ThresholdReport(case="II", gamma1_star=None, **rep)
    if r1 + r2 <= 1.0:
        return ThresholdReport(case="I", gamma1_star=None, **rep)
    return ThresholdReport(case="III", gamma1_star=gamma1_star(hp), **rep)
