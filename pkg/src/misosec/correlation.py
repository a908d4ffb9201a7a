"""Transmit-correlation models and moments of their limiting spectra.

A correlation model describes the Hermitian PSD matrix R governing
transmit-side antenna correlation: the identity (no correlation), the
exponential Toeplitz family r_ij = nu^|i-j|, an explicit matrix, or an
explicit discrete eigenvalue distribution.  Large-system formulas touch
R only through expectations E[f(T)] over the limiting distribution of
its eigenvalues, so every model is reduced to spectral nodes and weights
and expectations are evaluated as weighted sums.

For the exponential Toeplitz family the limiting spectrum is represented
through the symbol of the Toeplitz sequence: T = t(omega) with

    t(omega) = (1 - nu^2) / (1 - 2 nu cos(omega) + nu^2),

omega uniform on [0, 2*pi).  Expectations become smooth periodic
integrals over the angle, evaluated by Gauss-Legendre or uniform-angle
quadrature; both converge to machine precision at the default node
count and serve as cross-checks of each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import toeplitz

from .errors import ModelValidationError

KIND_IDENTITY = "identity"
KIND_TOEPLITZ_EXP = "toeplitz_exp"
KIND_MATRIX = "matrix"
KIND_SPECTRUM = "spectrum"

SCHEME_GAUSS_LEGENDRE = "gauss-legendre-on-angle"
SCHEME_UNIFORM_ANGLE = "uniform-angle"
SCHEME_DISCRETE = "discrete-spectrum-sum"

_ANGULAR_SCHEMES = (SCHEME_GAUSS_LEGENDRE, SCHEME_UNIFORM_ANGLE)

# Explicit matrices are rescaled to unit mean diagonal (homogeneous-user
# convention); inputs off by more than this factor are rejected as user error
# rather than silently rescaled.
_TRACE_SLACK = 0.10


@dataclass(frozen=True)
class QuadratureSettings:
    """Discretization used to evaluate spectral expectations.

    node_count applies to the angular rules for the Toeplitz-exponential
    model; discrete models always use their exact atoms.
    """

    node_count: int = 2048
    scheme: str = SCHEME_GAUSS_LEGENDRE

    def __post_init__(self) -> None:
        if self.node_count < 2:
            raise ModelValidationError(f"node_count must be >= 2, got {self.node_count}")
        if self.scheme not in (*_ANGULAR_SCHEMES, SCHEME_DISCRETE):
            raise ModelValidationError(f"unknown quadrature scheme {self.scheme!r}")


DEFAULT_QUADRATURE = QuadratureSettings()


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """Transmit correlation matrix family, by kind.

    kind       one of "identity", "toeplitz_exp", "matrix", "spectrum"
    nu         Toeplitz-exponential coefficient, 0 <= nu < 1
    matrix     explicit Hermitian matrix with positive eigenvalues,
               normalized on construction so that trace/M = 1
    spectrum   ((eigenvalue, weight), ...) atoms of a discrete limiting
               eigenvalue distribution; weights sum to 1
    """

    kind: str
    nu: float | None = None
    matrix: np.ndarray | None = None
    spectrum: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == KIND_IDENTITY:
            pass
        elif self.kind == KIND_TOEPLITZ_EXP:
            if self.nu is None or not 0.0 <= self.nu < 1.0:
                # nu = 1 makes the matrix rank one, i.e. singular.
                raise ModelValidationError(f"nu must lie in [0, 1), got {self.nu}")
        elif self.kind == KIND_MATRIX:
            object.__setattr__(self, "matrix", _validated_matrix(self.matrix))
        elif self.kind == KIND_SPECTRUM:
            object.__setattr__(self, "spectrum", _validated_spectrum(self.spectrum))
        else:
            raise ModelValidationError(f"unknown correlation kind {self.kind!r}")

    @classmethod
    def identity(cls) -> "CorrelationModel":
        return cls(kind=KIND_IDENTITY)

    @classmethod
    def toeplitz_exponential(cls, nu: float) -> "CorrelationModel":
        return cls(kind=KIND_TOEPLITZ_EXP, nu=float(nu))

    @classmethod
    def explicit_matrix(cls, matrix: np.ndarray) -> "CorrelationModel":
        return cls(kind=KIND_MATRIX, matrix=matrix)

    @classmethod
    def explicit_spectrum(cls, points: Sequence[tuple[float, float]]) -> "CorrelationModel":
        return cls(kind=KIND_SPECTRUM, spectrum=tuple((float(t), float(w)) for t, w in points))

    @classmethod
    def from_dict(cls, d: dict) -> "CorrelationModel":
        """Build a model from its config-file form."""
        kind = d.get("kind")
        if kind == KIND_IDENTITY:
            return cls.identity()
        if kind == KIND_TOEPLITZ_EXP:
            return cls.toeplitz_exponential(d["nu"])
        if kind == KIND_SPECTRUM:
            return cls.explicit_spectrum([tuple(p) for p in d["points"]])
        raise ModelValidationError(f"unknown correlation kind in config: {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == KIND_IDENTITY:
            return {"kind": KIND_IDENTITY}
        if self.kind == KIND_TOEPLITZ_EXP:
            return {"kind": KIND_TOEPLITZ_EXP, "nu": self.nu}
        if self.kind == KIND_SPECTRUM:
            return {"kind": KIND_SPECTRUM, "points": [list(p) for p in self.spectrum]}
        raise ModelValidationError("explicit-matrix models are not expressible in config files")


def _validated_matrix(matrix) -> np.ndarray:
    if matrix is None:
        raise ModelValidationError("explicit-matrix model requires a matrix")
    R = np.array(matrix, dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ModelValidationError(f"correlation matrix must be square, got shape {R.shape}")
    if np.max(np.abs(R - R.conj().T)) > 1e-8:
        raise ModelValidationError("correlation matrix is not Hermitian")
    m = R.shape[0]
    mean_diag = float(np.real(np.trace(R))) / m
    if abs(mean_diag - 1.0) > _TRACE_SLACK:
        raise ModelValidationError(
            f"trace/M = {mean_diag:.6g} deviates from 1 by more than {_TRACE_SLACK:.0%}; "
            "rescale the input explicitly"
        )
    R = R / mean_diag
    R = (R + R.conj().T) / 2.0
    eigs = np.linalg.eigvalsh(R)
    if eigs[0] <= 1e-12 * max(1.0, eigs[-1]):
        raise ModelValidationError("correlation matrix must have strictly positive eigenvalues")
    return R


def _validated_spectrum(points) -> tuple[tuple[float, float], ...]:
    if not points:
        raise ModelValidationError("spectrum model requires at least one (eigenvalue, weight) atom")
    pts = tuple((float(t), float(w)) for t, w in points)
    for t, w in pts:
        if t <= 0.0:
            raise ModelValidationError(f"spectrum eigenvalues must be strictly positive, got {t}")
        if w < 0.0:
            raise ModelValidationError(f"spectrum weights must be nonnegative, got {w}")
    total = sum(w for _, w in pts)
    if abs(total - 1.0) > 1e-12:
        raise ModelValidationError(f"spectrum weights must sum to 1, got {total!r}")
    return pts


@lru_cache(maxsize=8)
def _gauss_legendre(node_count: int) -> tuple[np.ndarray, np.ndarray]:
    # ~1 s at 2048 nodes (companion-matrix eigenproblem); cached because
    # solver loops rebuild spectral grids for the same node count.
    return np.polynomial.legendre.leggauss(node_count)


def build_correlation_matrix(model: CorrelationModel, M: int) -> np.ndarray:
    """Materialize the M x M correlation matrix for a finite system.

    Identity and Toeplitz-exponential models have unit diagonal by
    construction; explicit matrices are returned as stored (already
    normalized).  Spectrum-only models carry no finite-M matrix.
    """
    if M < 1:
        raise ModelValidationError(f"M must be >= 1, got {M}")
    if model.kind == KIND_IDENTITY:
        return np.eye(M)
    if model.kind == KIND_TOEPLITZ_EXP:
        return toeplitz(model.nu ** np.arange(M))
    if model.kind == KIND_MATRIX:
        if model.matrix.shape != (M, M):
            raise ModelValidationError(
                f"explicit matrix has shape {model.matrix.shape}, requested M={M}"
            )
        return model.matrix.copy()
    raise ModelValidationError("a spectrum-only model has no finite-dimensional matrix")


def spectral_grid(
    model: CorrelationModel, q: QuadratureSettings = DEFAULT_QUADRATURE
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes t_i and weights w_i such that E[f(T)] ~= sum_i w_i f(t_i).

    Exact for identity, spectrum, and explicit-matrix models (finite
    atoms); quadrature of the angular density for Toeplitz-exponential.
    """
    if model.kind == KIND_IDENTITY:
        return np.array([1.0]), np.array([1.0])
    if model.kind == KIND_SPECTRUM:
        pts = np.asarray(model.spectrum, dtype=float)
        return pts[:, 0].copy(), pts[:, 1].copy()
    if model.kind == KIND_MATRIX:
        eigs = np.linalg.eigvalsh(model.matrix)
        m = eigs.size
        return eigs, np.full(m, 1.0 / m)
    # Toeplitz-exponential: nu = 0 collapses to a point mass at t = 1.
    nu = model.nu
    if nu == 0.0:
        return np.array([1.0]), np.array([1.0])
    if q.scheme == SCHEME_GAUSS_LEGENDRE:
        x, w = _gauss_legendre(q.node_count)
        omega = np.pi * (x + 1.0)
        weights = w / 2.0
    elif q.scheme == SCHEME_UNIFORM_ANGLE:
        # composite trapezoid on a periodic integrand = equal-weight sum
        omega = 2.0 * np.pi * np.arange(q.node_count) / q.node_count
        weights = np.full(q.node_count, 1.0 / q.node_count)
    else:
        raise ModelValidationError(
            "discrete-spectrum-sum cannot be applied to a Toeplitz-exponential model"
        )
    t = (1.0 - nu**2) / (1.0 - 2.0 * nu * np.cos(omega) + nu**2)
    return t, weights


def spectral_expectation(
    model: CorrelationModel,
    f: Callable[[np.ndarray], np.ndarray],
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Expectation E[f(T)] over the limiting eigenvalue distribution.

    f must accept an ndarray of eigenvalues and evaluate elementwise.
    """
    t, w = spectral_grid(model, q)
    return float(np.dot(w, np.asarray(f(t), dtype=float)))


def e_ij_on_grid(
    t: np.ndarray, w: np.ndarray, i: int, j: int, xi: float, eta: float, beta: float
) -> float:
    """E[T^i / (xi (1 + eta) + beta T)^j] on a prebuilt spectral grid."""
    a = xi * (1.0 + eta)
    return float(np.dot(w, t**i / (a + beta * t) ** j))


def moment_e_ij(
    model: CorrelationModel,
    i: int,
    j: int,
    xi: float,
    eta: float,
    beta: float,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Spectral moment E[T^i / (xi (1 + eta) + beta T)^j].

    These moments drive every large-system expression; i and j range
    over {1, 2, 3}.
    """
    if i not in (1, 2, 3) or j not in (1, 2, 3):
        raise ModelValidationError(f"moment orders must lie in {{1,2,3}}, got ({i}, {j})")
    if xi <= 0.0:
        raise ModelValidationError(f"xi must be positive, got {xi}")
    if beta <= 0.0:
        raise ModelValidationError(f"beta must be positive, got {beta}")
    if eta < 0.0:
        raise ModelValidationError(f"eta must be nonnegative, got {eta}")
    t, w = spectral_grid(model, q)
    return e_ij_on_grid(t, w, i, j, xi, eta, beta)
