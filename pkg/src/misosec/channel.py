"""Correlated Rayleigh channel sampling with reproducible randomness.

Channels are drawn as H = G S, where G has i.i.d. circularly-symmetric
complex Gaussian entries (zero mean, unit variance) and S is the
Hermitian square root of the transmit correlation matrix.

Randomness contract: the bit generator is Philox (counter-based, 64-bit,
keyed directly by the seed) and Gaussians are produced by Box-Muller on
open-interval uniforms u = ((raw >> 11) + 1) * 2^-53 in (0, 1].  The
transform is fixed here rather than delegated to the generator's default
normal method so the mapping from seed to matrix is fully documented and
reproducible: identical (seed, dims, model) triples yield bit-identical
channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correlation import CorrelationModel, KIND_IDENTITY, build_correlation_matrix
from .errors import ModelValidationError

_MAX_SEED = 2**64


@dataclass(frozen=True)
class SystemDims:
    """Antenna/user counts M, K and their load ratio beta = K/M."""

    M: int
    K: int
    beta: float = field(init=False)

    def __post_init__(self) -> None:
        if self.M < 1 or self.K < 1:
            raise ModelValidationError(f"M and K must be >= 1, got M={self.M}, K={self.K}")
        object.__setattr__(self, "beta", self.K / self.M)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One sampled K x M channel with its generating seed."""

    H: np.ndarray
    dims: SystemDims
    seed: int
    model: CorrelationModel


def _philox(seed: int) -> np.random.Generator:
    if not 0 <= seed < _MAX_SEED:
        raise ModelValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def sample_iid_gaussian(K: int, M: int, seed: int) -> np.ndarray:
    """K x M matrix of i.i.d. CN(0, 1) entries, deterministic in the seed.

    Real and imaginary parts are independent N(0, 1/2), built from one
    Box-Muller pair per entry (cosine branch -> real, sine -> imaginary).
    """
    g = _philox(seed)
    raw1 = g.integers(0, 2**64, size=(K, M), dtype=np.uint64)
    raw2 = g.integers(0, 2**64, size=(K, M), dtype=np.uint64)
    u1 = ((raw1 >> np.uint64(11)) + np.uint64(1)).astype(float) * 2.0**-53
    u2 = ((raw2 >> np.uint64(11)) + np.uint64(1)).astype(float) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    return (radius * np.cos(angle) + 1j * radius * np.sin(angle)) / np.sqrt(2.0)


def hermitian_sqrt(R: np.ndarray) -> np.ndarray:
    """Hermitian PSD square root S with S @ S = R.

    Eigenvalues in [-1e-10, 0) are clamped to zero (numerical noise of a
    PSD input); anything more negative is rejected.
    """
    R = np.asarray(R, dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ModelValidationError(f"expected a square matrix, got shape {R.shape}")
    if np.max(np.abs(R - R.conj().T)) > 1e-8:
        raise ModelValidationError("matrix is not Hermitian")
    eigs, V = np.linalg.eigh(R)
    if eigs[0] < -1e-10:
        raise ModelValidationError(f"matrix has negative eigenvalue {eigs[0]:.3e}")
    eigs = np.clip(eigs, 0.0, None)
    S = (V * np.sqrt(eigs)) @ V.conj().T
    return (S + S.conj().T) / 2.0


def sample_channel(dims: SystemDims, model: CorrelationModel, seed: int) -> ChannelRealization:
    """Draw one correlated channel H = G S for the given seed.

    With identity correlation the Gaussian matrix is returned untouched
    (S = I exactly), so the draw can be regenerated independently via
    sample_iid_gaussian.
    """
    G = sample_iid_gaussian(dims.K, dims.M, seed)
    if model.kind == KIND_IDENTITY:
        H = G
    else:
        S = hermitian_sqrt(build_correlation_matrix(model, dims.M))
        H = G @ S
    return ChannelRealization(H=H, dims=dims, seed=seed, model=model)
