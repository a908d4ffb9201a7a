"""Per-user secrecy rates under the cooperating-eavesdropper model.

For each message k the other K-1 users are treated as a single
cooperating eavesdropper that cancels all interference, so user k's rate
is penalized by the power its beamformer leaks onto the other users'
channels.  With unnormalized beamformers w_j, normalization gamma, and
SNR rho, the rate of user k is

    R_k = { log2 [ (1 + rho |h_k^H w_k|^2 / (gamma + rho sum_{j!=k} |h_k^H w_j|^2))
                   / (1 + (rho / gamma) sum_{j!=k} |h_j^H w_k|^2) ] }^+

All signal, interference, and leakage terms flow through the Gram matrix
G = H W, so a report is one matrix product plus row/column sums.

The module also evaluates the same rates through the deflated-resolvent
quantities A_k, B_k (quadratic forms in the uncorrelated channel and the
inverse correlation matrix), an algebraically equivalent route used to
cross-validate the Gram-matrix pipeline and to compare against the
large-system limits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import hermitian_sqrt
from .errors import ModelValidationError, SingularChannelError
from .precoders import PrecoderOutput, rci_gamma


@dataclass(frozen=True, eq=False)
class SecrecyReport:
    """Per-user secrecy rates plus the terms they were computed from.

    signal_terms[k]       rho |h_k^H w_k|^2
    interference_terms[k] rho sum_{j != k} |h_k^H w_j|^2
    leakage_terms[k]      (rho / gamma) sum_{j != k} |h_j^H w_k|^2
    """

    per_user_rates: np.ndarray
    sum_rate: float
    signal_terms: np.ndarray
    interference_terms: np.ndarray
    leakage_terms: np.ndarray
    rho: float
    gamma: float


@dataclass(frozen=True)
class LeakageFormQuantities:
    """Deflated-resolvent quantities for one user: the signal quadratic
    form a, the interference/leakage quadratic form b (>= 0), and the
    shared power normalization gamma."""

    a: float
    b: float
    gamma: float


def positive_part(x: float) -> float:
    """max(x, 0)."""
    return x if x > 0.0 else 0.0


def _rates_from_terms(signal, interference, leakage, gamma):
    ratio = (1.0 + signal / (gamma + interference)) / (1.0 + leakage)
    return np.maximum(np.log2(ratio), 0.0)


def per_user_secrecy_rates(H: np.ndarray, P: PrecoderOutput, rho: float) -> SecrecyReport:
    """Secrecy rates of all users for one channel and precoder."""
    if rho <= 0.0:
        raise ModelValidationError(f"rho must be positive, got {rho}")
    if P.gamma <= 0.0:
        raise ModelValidationError(f"precoder gamma must be positive, got {P.gamma}")
    H = np.asarray(H, dtype=complex)
    K = H.shape[0]
    if P.W.shape != (H.shape[1], K):
        raise ModelValidationError(
            f"precoder shape {P.W.shape} does not match channel shape {H.shape}"
        )
    G2 = np.abs(H @ P.W) ** 2
    diag = np.diag(G2)
    signal = rho * diag
    interference = rho * (G2.sum(axis=1) - diag)
    leakage = (rho / P.gamma) * (G2.sum(axis=0) - diag)
    rates = _rates_from_terms(signal, interference, leakage, P.gamma)
    return SecrecyReport(
        per_user_rates=rates,
        sum_rate=float(rates.sum()),
        signal_terms=signal,
        interference_terms=interference,
        leakage_terms=leakage,
        rho=rho,
        gamma=P.gamma,
    )


def leakage_form_quantities(
    H_tilde: np.ndarray, R: np.ndarray, xi: float
) -> list[LeakageFormQuantities]:
    """Per-user quadratic forms a_k, b_k from the deflated resolvent.

    With Q_k = (G_k^H G_k + M xi R^-1)^-1, where G_k drops row k of the
    uncorrelated channel,

        a_k = g_k^H Q_k g_k,    b_k = || G_k Q_k g_k ||^2.

    gamma is the regularized-inversion power normalization of the full
    correlated channel (shared by all users).
    """
    if xi <= 0.0:
        raise ModelValidationError(f"xi must be positive, got {xi}")
    H_tilde = np.asarray(H_tilde, dtype=complex)
    R = np.asarray(R, dtype=complex)
    K, M = H_tilde.shape
    eigs = np.linalg.eigvalsh(R)
    if eigs[0] <= 0.0 or eigs[-1] / eigs[0] > 1e12:
        raise SingularChannelError("correlation matrix is numerically singular")
    R_inv = np.linalg.inv(R)
    R_inv = (R_inv + R_inv.conj().T) / 2.0
    gamma = rci_gamma(H_tilde @ hermitian_sqrt(R), xi)
    out = []
    for k in range(K):
        g_k = H_tilde[k].conj()  # channel vector of user k (column convention)
        G_k = np.delete(H_tilde, k, axis=0)
        Q_inv = G_k.conj().T @ G_k + M * xi * R_inv
        x = np.linalg.solve(Q_inv, g_k)
        if not np.all(np.isfinite(x)):
            raise SingularChannelError(f"deflated resolvent is ill conditioned for user {k}")
        a_k = float(np.real(np.vdot(g_k, x)))
        b_k = float(np.real(np.vdot(G_k @ x, G_k @ x)))
        out.append(LeakageFormQuantities(a=a_k, b=b_k, gamma=gamma))
    return out


def secrecy_rates_leakage_form(
    H_tilde: np.ndarray, R: np.ndarray, xi: float, rho: float
) -> SecrecyReport:
    """Secrecy rates via the a_k/b_k quadratic forms.

    Equivalent to per_user_secrecy_rates on H = H_tilde R^(1/2) with the
    regularized-inversion precoder at the same xi: the signal amplitude
    is a_k / (1 + a_k) and both the interference and leakage powers are
    b_k / (1 + a_k)^2.
    """
    if rho <= 0.0:
        raise ModelValidationError(f"rho must be positive, got {rho}")
    quants = leakage_form_quantities(H_tilde, R, xi)
    a = np.array([q.a for q in quants])
    b = np.array([q.b for q in quants])
    gamma = quants[0].gamma
    signal = rho * (a / (1.0 + a)) ** 2
    interference = rho * b / (1.0 + a) ** 2
    leakage = (rho / gamma) * b / (1.0 + a) ** 2
    rates = _rates_from_terms(signal, interference, leakage, gamma)
    return SecrecyReport(
        per_user_rates=rates,
        sum_rate=float(rates.sum()),
        signal_terms=signal,
        interference_terms=interference,
        leakage_terms=leakage,
        rho=rho,
        gamma=gamma,
    )
