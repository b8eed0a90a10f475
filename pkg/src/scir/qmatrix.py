"""Infection-subsystem Jacobian at the DFE for heterogeneous activity rates.

Q is the 4N x 4N linearization over compartments (C1, C2, I1, I2); its
spectral abscissa is the exponential decay/growth rate of a small
infection. The shifted matrix Qhat = Q + psi*I is entrywise non-negative,
which both the power iteration and the geometric-programming layer rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .netgen import LayeredNetwork, connected_components
from .params import ActivityRates, EpidemicParams, ParameterError


@dataclass
class QAssembly:
    f: sp.csr_matrix
    vplus: sp.csr_matrix
    vminus_diag: np.ndarray
    psi: float
    n: int

    @property
    def q(self) -> sp.csr_matrix:
        return (self.f + self.vplus - sp.diags(self.vminus_diag)).tocsr()

    @property
    def qhat(self) -> sp.csr_matrix:
        shift = self.psi - self.vminus_diag
        return (self.f + self.vplus + sp.diags(shift)).tocsr()


def psi_shift(
    epi: EpidemicParams, rates: ActivityRates, gamma1_upper: np.ndarray | None = None
) -> float:
    """Largest removal rate over all compartments, using the gamma1 upper bound.

    Using the bound (rather than the current gamma1) keeps Qhat non-negative
    for every rate vector inside the optimization box.
    """
    g1_up = rates.gamma1 if gamma1_upper is None else np.broadcast_to(
        np.asarray(gamma1_upper, dtype=float), (rates.n,)
    )
    return float(max(
        (g1_up + epi.eta_prime).max(),
        (rates.gamma2 + epi.eta_prime).max(),
        (rates.gamma1_i + epi.delta).max(),
        (rates.gamma2_i + epi.delta).max(),
    ))


def build_q(
    net: LayeredNetwork,
    epi: EpidemicParams,
    rates: ActivityRates,
    gamma1_upper: np.ndarray | None = None,
) -> QAssembly:
    """Assemble F, V+ and V- in block order (C1, C2, I1, I2)."""
    n = net.n
    if rates.n != n:
        raise ParameterError("rate vectors must match the network size")
    g1, g2 = rates.gamma1, rates.gamma2
    s1 = g2 / (g1 + g2)
    s2 = g1 / (g1 + g2)
    a = sp.csr_matrix(net.a)
    b_hat = sp.csr_matrix(net.b_hat)
    a1 = sp.diags(s1) @ a
    a2 = sp.diags(s2) @ a
    b2 = sp.diags(s2) @ b_hat
    f1 = sp.bmat([[a1, a1], [a2, a2 + b2]])
    kappa, kbar = epi.kappa, 1.0 - epi.kappa
    f = sp.bmat([
        [kappa * epi.beta_c * f1, kappa * epi.beta_i * f1],
        [kbar * epi.beta_c * f1, kbar * epi.beta_i * f1],
    ]).tocsr()
    eye = sp.identity(n)
    zero = None
    vplus = sp.bmat([
        [zero, sp.diags(g2), zero, zero],
        [sp.diags(g1), zero, zero, zero],
        [epi.eta * eye, zero, zero, sp.diags(rates.gamma2_i)],
        [zero, epi.eta * eye, sp.diags(rates.gamma1_i), zero],
    ]).tocsr()
    vminus = np.concatenate([
        g1 + epi.eta_prime,
        g2 + epi.eta_prime,
        rates.gamma1_i + epi.delta,
        rates.gamma2_i + epi.delta,
    ])
    psi = psi_shift(epi, rates, gamma1_upper)
    return QAssembly(f=f, vplus=vplus, vminus_diag=vminus, psi=psi, n=n)


def _component_rows(members: np.ndarray, n: int) -> np.ndarray:
    return np.concatenate([members, members + n, members + 2 * n, members + 3 * n])


def _perron_root_power(m: sp.csr_matrix, tol: float = 1e-9, max_iter: int = 100_000) -> float:
    dim = m.shape[0]
    v = np.full(dim, 1.0 / np.sqrt(dim))
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v_new = w / norm
        lam = float(v_new @ (m @ v_new))
        residual = np.linalg.norm(m @ v_new - lam * v_new)
        v = v_new
        if residual <= tol * max(1.0, abs(lam)):
            return lam
    raise ArithmeticError(f"power iteration did not converge within {max_iter} iterations")


def lambda1(assembly: QAssembly, net: LayeredNetwork | None = None,
            dense_cutoff: int = 200) -> float:
    """Spectral abscissa of Q (largest real part of its eigenvalues).

    Dense eigensolver up to `dense_cutoff` nodes; beyond that, power
    iteration on the non-negative shift, per connected component when the
    network is supplied.
    """
    if assembly.n <= dense_cutoff:
        return float(np.linalg.eigvals(assembly.q.toarray()).real.max())
    qhat = assembly.qhat
    if net is None:
        return _perron_root_power(qhat) - assembly.psi
    best = -np.inf
    for members in connected_components(net):
        rows = _component_rows(members, assembly.n)
        sub = qhat[rows][:, rows]
        if sub.shape[0] <= 4 * dense_cutoff:
            rho = float(np.linalg.eigvals(sub.toarray()).real.max())
        else:
            rho = _perron_root_power(sub.tocsr())
        best = max(best, rho - assembly.psi)
    return best


def lambda1_dense(assembly: QAssembly) -> float:
    """Dense-eigensolver spectral abscissa (test oracle and small-N path)."""
    return float(np.linalg.eigvals(assembly.q.toarray()).real.max())


def coordinate_dump(assembly: QAssembly) -> str:
    """Q as `row col value` triplets, one per line (debug aid)."""
    coo = assembly.q.tocoo()
    lines = [f"{i} {j} {v:.17g}" for i, j, v in zip(coo.row, coo.col, coo.data)]
    return "\n".join(lines)
