"""Linear downlink precoders: regularized channel inversion, zero
forcing, and single-user (matched) beamforming.

Every precoder returns the unnormalized matrix W together with its power
normalization constant gamma = Tr(W W^H); rate formulas place gamma
explicitly in their SINR terms, so folding it into W here would invite
double-normalization bugs.  Columns of W are the per-user beamformers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ModelValidationError, SingularChannelError

KIND_RCI = "rci"
KIND_ZF = "zf"
KIND_SUB = "sub"

_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class PrecoderOutput:
    """Unnormalized precoding matrix (M x K), its normalization constant,
    and the kind that produced it ("rci" carries its regularization)."""

    W: np.ndarray
    gamma: float
    kind: str
    xi: float | None = None


def rci_gamma(H: np.ndarray, xi: float) -> float:
    """Power normalization Tr{H^H H (H^H H + xi M I)^-2}.

    Evaluated through the eigenvalues of the smaller Gram matrix: the
    nonzero spectra of H^H H and H H^H coincide, and t/(t + xi M)^2
    vanishes at t = 0.
    """
    K, M = H.shape
    gram = H @ H.conj().T if K <= M else H.conj().T @ H
    lam = np.linalg.eigvalsh(gram)
    return float(np.sum(lam / (lam + xi * M) ** 2))


def rci_precoder(H: np.ndarray, xi: float) -> PrecoderOutput:
    """Regularized channel inversion W = H^H (H H^H + xi M I)^-1."""
    if xi <= 0.0:
        raise ModelValidationError(f"xi must be positive, got {xi}")
    H = np.asarray(H, dtype=complex)
    K, M = H.shape
    A = H @ H.conj().T + xi * M * np.eye(K)
    W = cho_solve(cho_factor(A), H).conj().T
    return PrecoderOutput(W=W, gamma=rci_gamma(H, xi), kind=KIND_RCI, xi=xi)


def zf_precoder(H: np.ndarray) -> PrecoderOutput:
    """Zero-forcing precoder, the pseudo-inverse of H.

    K <= M inverts H H^H (nulls interference and leakage exactly);
    K > M inverts H^H H.
    """
    H = np.asarray(H, dtype=complex)
    K, M = H.shape
    gram = H @ H.conj().T if K <= M else H.conj().T @ H
    lam = np.linalg.eigvalsh(gram)
    if lam[0] <= 0.0 or lam[-1] / lam[0] > _COND_LIMIT:
        raise SingularChannelError(
            f"channel Gram matrix is numerically singular (cond > {_COND_LIMIT:.0e})"
        )
    if K <= M:
        W = np.linalg.solve(gram, H).conj().T
    else:
        W = np.linalg.solve(gram, H.conj().T)
    gamma = float(np.sum(np.abs(W) ** 2))
    return PrecoderOutput(W=W, gamma=gamma, kind=KIND_ZF)


def sub_precoder(H: np.ndarray) -> PrecoderOutput:
    """Single-user beamformer W = H^H (matched filter per user)."""
    H = np.asarray(H, dtype=complex)
    gamma = float(np.sum(np.abs(H) ** 2))
    if gamma == 0.0:
        raise ModelValidationError("channel matrix is identically zero")
    return PrecoderOutput(W=H.conj().T.copy(), gamma=gamma, kind=KIND_SUB)
