"""Epidemic and activity-rate parameters shared by every engine."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import yaml


class ParameterError(ValueError):
    """Raised when a parameter set violates its invariants."""


@dataclass(frozen=True)
class EpidemicParams:
    """Transmission and progression rates of the SCIR process.

    A susceptible contracting the disease becomes a carrier with probability
    `kappa`, otherwise directly infected. Carriers progress to infected at
    `eta` and recover silently at `eta_prime - eta`; infected recover at `delta`.
    """

    beta_c: float
    beta_i: float
    kappa: float
    eta: float
    eta_prime: float
    delta: float

    def violations(self) -> list[str]:
        errs = []
        for name in ("beta_c", "beta_i", "eta", "eta_prime", "delta"):
            if getattr(self, name) < 0:
                errs.append(f"{name} must be non-negative")
        if not 0.0 <= self.kappa <= 1.0:
            errs.append("kappa must lie in [0, 1]")
        if self.eta_prime <= self.eta:
            errs.append("eta_prime must exceed eta")
        if self.eta <= 0:
            errs.append("eta must be positive")
        if self.delta <= 0:
            errs.append("delta must be positive")
        return errs

    def validate(self) -> "EpidemicParams":
        errs = self.violations()
        if errs:
            raise ParameterError("; ".join(errs))
        return self


def _as_rate_array(value, n: int, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    if np.any(arr < 0):
        raise ParameterError(f"{name} must be non-negative")
    return arr


@dataclass(frozen=True)
class ActivityRates:
    """Per-node activation (gamma1*) and deactivation (gamma2*) rates.

    Carriers keep the susceptible activity pattern, so `gamma1`/`gamma2`
    cover both S and C states. Recovered-state rates default to the
    susceptible ones; they do not feed back into infection dynamics.
    """

    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma1_i: np.ndarray
    gamma2_i: np.ndarray
    gamma1_r: np.ndarray | None = None
    gamma2_r: np.ndarray | None = None

    def __post_init__(self):
        g1 = np.atleast_1d(np.asarray(self.gamma1, dtype=float))
        n = len(g1)
        object.__setattr__(self, "gamma1", _as_rate_array(g1, n, "gamma1"))
        object.__setattr__(self, "gamma2", _as_rate_array(self.gamma2, n, "gamma2"))
        object.__setattr__(self, "gamma1_i", _as_rate_array(self.gamma1_i, n, "gamma1_i"))
        object.__setattr__(self, "gamma2_i", _as_rate_array(self.gamma2_i, n, "gamma2_i"))
        g1r = self.gamma1 if self.gamma1_r is None else self.gamma1_r
        g2r = self.gamma2 if self.gamma2_r is None else self.gamma2_r
        object.__setattr__(self, "gamma1_r", _as_rate_array(g1r, n, "gamma1_r"))
        object.__setattr__(self, "gamma2_r", _as_rate_array(g2r, n, "gamma2_r"))
        if np.any(self.gamma1 + self.gamma2 <= 0):
            raise ParameterError("gamma1 + gamma2 must be positive for every node")

    @property
    def n(self) -> int:
        return len(self.gamma1)

    def activity_probability(self) -> np.ndarray:
        """Stationary probability of being active in the S/C states."""
        return self.gamma1 / (self.gamma1 + self.gamma2)

    def with_gamma1(self, gamma1) -> "ActivityRates":
        return replace(self, gamma1=_as_rate_array(gamma1, self.n, "gamma1"))

    @classmethod
    def uniform(cls, n: int, gamma1, gamma2, gamma1_i, gamma2_i,
                gamma1_r=None, gamma2_r=None) -> "ActivityRates":
        mk = lambda v: None if v is None else np.full(n, float(v))
        return cls(
            gamma1=np.full(n, float(gamma1)),
            gamma2=np.full(n, float(gamma2)),
            gamma1_i=np.full(n, float(gamma1_i)),
            gamma2_i=np.full(n, float(gamma2_i)),
            gamma1_r=mk(gamma1_r),
            gamma2_r=mk(gamma2_r),
        )


@dataclass(frozen=True)
class HomogeneousParams:
    """Shared-rate model on random regular layers with uniform link probability."""

    epi: EpidemicParams
    d1: float
    d2: float
    p: float
    gamma1: float
    gamma2: float
    gamma1_i: float
    gamma2_i: float

    def violations(self) -> list[str]:
        errs = self.epi.violations()
        if self.d1 < 0 or self.d2 < 0:
            errs.append("degrees must be non-negative")
        if not 0.0 <= self.p <= 1.0:
            errs.append("p must lie in [0, 1]")
        for name in ("gamma1", "gamma2", "gamma1_i", "gamma2_i"):
            if getattr(self, name) < 0:
                errs.append(f"{name} must be non-negative")
        if self.gamma1 + self.gamma2 <= 0:
            errs.append("gamma1 + gamma2 must be positive")
        return errs

    def validate(self) -> "HomogeneousParams":
        errs = self.violations()
        if errs:
            raise ParameterError("; ".join(errs))
        return self

    @property
    def s1(self) -> float:
        """Disease-free probability of being inactive."""
        return self.gamma2 / (self.gamma1 + self.gamma2)

    @property
    def s2(self) -> float:
        """Disease-free probability of being active."""
        return self.gamma1 / (self.gamma1 + self.gamma2)

    def with_gamma1(self, gamma1: float) -> "HomogeneousParams":
        return replace(self, gamma1=float(gamma1))

    def rates(self, n: int) -> ActivityRates:
        return ActivityRates.uniform(n, self.gamma1, self.gamma2, self.gamma1_i, self.gamma2_i)


def activity_probability(gamma1: float, gamma2: float) -> float:
    """Stationary active probability gamma1 / (gamma1 + gamma2)."""
    if gamma1 < 0 or gamma2 < 0:
        raise ParameterError("rates must be non-negative")
    if gamma1 + gamma2 <= 0:
        raise ParameterError("gamma1 + gamma2 must be positive")
    return gamma1 / (gamma1 + gamma2)


def gamma1_for_activity(s2: float, gamma2: float) -> float:
    """Activation rate that yields stationary active probability `s2`."""
    if not 0.0 <= s2 < 1.0:
        raise ParameterError("s2 must lie in [0, 1)")
    return gamma2 * s2 / (1.0 - s2)


def epidemic_from_mapping(cfg: dict) -> EpidemicParams:
    return EpidemicParams(
        beta_c=float(cfg["beta_c"]),
        beta_i=float(cfg["beta_i"]),
        kappa=float(cfg.get("kappa", 1.0)),
        eta=float(cfg["eta"]),
        eta_prime=float(cfg["eta_prime"]),
        delta=float(cfg["delta"]),
    ).validate()


def activity_from_mapping(cfg: dict, n: int) -> ActivityRates:
    def get(name, default=None):
        if name in cfg:
            return _as_rate_array(cfg[name], n, name)
        return default

    g1 = get("gamma1")
    g2 = get("gamma2")
    if g1 is None or g2 is None:
        raise ParameterError("activity config requires gamma1 and gamma2")
    g1i = get("gamma1_i")
    g2i = get("gamma2_i")
    if g1i is None or g2i is None:
        raise ParameterError("activity config requires gamma1_i and gamma2_i")
    return ActivityRates(
        gamma1=g1, gamma2=g2, gamma1_i=g1i, gamma2_i=g2i,
        gamma1_r=get("gamma1_r"), gamma2_r=get("gamma2_r"),
    )


def homogeneous_from_mapping(cfg: dict) -> HomogeneousParams:
    epi = epidemic_from_mapping(cfg["epidemic"])
    act = cfg["activity"]
    net = cfg["network"]
    return HomogeneousParams(
        epi=epi,
        d1=float(net["d1"]),
        d2=float(net["d2"]),
        p=float(net["p"]),
        gamma1=float(act["gamma1"]),
        gamma2=float(act["gamma2"]),
        gamma1_i=float(act["gamma1_i"]),
        gamma2_i=float(act["gamma2_i"]),
    ).validate()


def load_config(path) -> dict:
    """Load a YAML configuration file into a plain mapping."""
    with open(path, "r", encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ParameterError(f"{path}: configuration must be a mapping")
    return cfg
