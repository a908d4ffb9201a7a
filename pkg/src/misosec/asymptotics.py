"""Deterministic equivalents in the large-system limit.

As M and K grow with fixed load ratio beta = K/M, the per-user secrecy
rate of regularized channel inversion converges almost surely to a
non-random function of (beta, xi, rho) and the limiting eigenvalue
distribution of the transmit correlation matrix.  Everything here is
driven by the scalar fixed point

    eta = E[ T (1 + eta) / (xi (1 + eta) + beta T) ]

and the spectral moments E_ij = E[T^i / (xi (1 + eta) + beta T)^j].
The limiting per-user rate is

    R = { log2 [ (1 + eta (rho E22 + (xi rho / beta) chi) / (rho E22 + chi))
                 / (1 + rho E22 / chi) ] }^+,   chi = (1 + eta)^2 E12,

with the finite-system quadratic forms converging to a -> eta,
b -> beta E22 / (1 - beta E22) and gamma -> beta E12 / (1 - beta E22).

Zero forcing and single-user beamforming admit their own limits (the
xi -> 0 and xi -> infinity ends of the regularization range), and the
exponential Toeplitz family collapses the two moment combinations into
one closed-form scalar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

from .correlation import (
    DEFAULT_QUADRATURE,
    CorrelationModel,
    QuadratureSettings,
    e_ij_on_grid,
    spectral_grid,
)
from .errors import ConvergenceError, DegenerateParameterError, ModelValidationError

MOMENT_ORDERS = ((1, 2), (2, 2), (1, 3), (2, 3), (3, 3))


@dataclass(frozen=True)
class FixedPointSettings:
    """Tolerance, iteration budget, and damping for scalar fixed points.

    Convergence is declared when the residual drops below
    tolerance * max(1, |value|); a purely absolute criterion is
    unattainable in double precision once the fixed point reaches ~1e6
    (tiny xi), where cancellation floors the computable residual.
    """

    tolerance: float = 1e-12
    max_iterations: int = 10_000
    damping: float = 1.0

    def __post_init__(self) -> None:
        if self.tolerance <= 0.0:
            raise ModelValidationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ModelValidationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0.0 < self.damping <= 1.0:
            raise ModelValidationError(f"damping must lie in (0, 1], got {self.damping}")


DEFAULT_FIXED_POINT = FixedPointSettings()


@dataclass(frozen=True, eq=False)
class DeterministicEquivalent:
    """Large-system state for regularized channel inversion.

    moments maps (i, j) to E_ij; a_limit, b_limit, gamma_limit are the
    limits of the per-user quadratic forms and the power normalization;
    rate is the limiting per-user secrecy rate in bits/s/Hz.
    """

    eta: float
    moments: Mapping[tuple[int, int], float]
    a_limit: float
    b_limit: float
    gamma_limit: float
    rate: float
    model: CorrelationModel
    beta: float
    xi: float
    rho: float


def _solve_eta_on_grid(
    t: np.ndarray, w: np.ndarray, beta: float, xi: float, s: FixedPointSettings
) -> float:
    """Fixed point of eta -> (1 + eta) E[T / (xi (1 + eta) + beta T)].

    The map is increasing and bounded by E[T]/xi, so plain iteration from
    eta = 1 converges monotonically; for tiny xi the contraction factor
    approaches 1 and a bisection on the residual takes over.
    """

    def step(eta: float) -> float:
        return (1.0 + eta) * float(np.dot(w, t / (xi * (1.0 + eta) + beta * t)))

    eta = 1.0
    for _ in range(s.max_iterations):
        nxt = (1.0 - s.damping) * eta + s.damping * step(eta)
        if abs(nxt - eta) <= s.tolerance * max(1.0, abs(nxt)):
            return nxt
        eta = nxt

    def residual(eta: float) -> float:
        return eta - step(eta)

    lo, hi = 0.0, 10.0 / xi
    for _ in range(64):
        if residual(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the eta fixed point")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if abs(r) <= s.tolerance * max(1.0, mid) or hi - lo <= np.finfo(float).eps * hi:
            return mid
        if r < 0.0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"eta fixed point did not converge (xi={xi}, beta={beta})")


def solve_eta(
    model: CorrelationModel,
    beta: float,
    xi: float,
    s: FixedPointSettings = DEFAULT_FIXED_POINT,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Solve the large-system signal fixed point eta for one (beta, xi)."""
    if xi <= 0.0 or beta <= 0.0:
        raise ModelValidationError(f"xi and beta must be positive, got xi={xi}, beta={beta}")
    t, w = spectral_grid(model, q)
    return _solve_eta_on_grid(t, w, beta, xi, s)


def _clamped_log2_ratio(num: float, den: float) -> float:
    if num <= den:
        return 0.0
    return float(np.log2(num / den))


def _rci_rate_from_moments(eta, e12, e22, beta, xi, rho) -> float:
    chi = (1.0 + eta) ** 2 * e12
    num = 1.0 + eta * (rho * e22 + (xi * rho / beta) * chi) / (rho * e22 + chi)
    den = 1.0 + rho * e22 / chi
    return _clamped_log2_ratio(num, den)


def rci_large_system_rate(
    model: CorrelationModel,
    beta: float,
    xi: float,
    rho: float,
    s: FixedPointSettings = DEFAULT_FIXED_POINT,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> DeterministicEquivalent:
    """Large-system secrecy rate of regularized channel inversion.

    Also reports the limits of the finite-system quadratic forms:
    a -> eta, b -> beta E22 / (1 - beta E22), and the power
    normalization gamma -> beta E12 / (1 - beta E22).
    """
    if rho <= 0.0:
        raise ModelValidationError(f"rho must be positive, got {rho}")
    t, w = spectral_grid(model, q)
    eta = _solve_eta_on_grid(t, w, beta, xi, s)
    moments = {(i, j): e_ij_on_grid(t, w, i, j, xi, eta, beta) for (i, j) in MOMENT_ORDERS}
    e12, e22 = moments[(1, 2)], moments[(2, 2)]
    if beta * e22 >= 1.0:
        raise DegenerateParameterError(
            f"beta * E22 = {beta * e22:.6g} >= 1: interference limit diverges"
        )
    rate = _rci_rate_from_moments(eta, e12, e22, beta, xi, rho)
    return DeterministicEquivalent(
        eta=eta,
        moments=moments,
        a_limit=eta,
        b_limit=beta * e22 / (1.0 - beta * e22),
        gamma_limit=beta * e12 / (1.0 - beta * e22),
        rate=rate,
        model=model,
        beta=beta,
        xi=xi,
        rho=rho,
    )


def uncorrelated_eta(beta: float, xi: float) -> float:
    """Closed-form eta for identity correlation.

    Root of xi eta^2 + (xi + beta - 1) eta - 1 = 0, written in the
    radical form 0.5 [ sqrt((1-beta)^2/xi^2 + 2(1+beta)/xi + 1)
    + (1-beta)/xi - 1 ].
    """
    if xi <= 0.0 or beta <= 0.0:
        raise ModelValidationError(f"xi and beta must be positive, got xi={xi}, beta={beta}")
    return 0.5 * (
        np.sqrt((1.0 - beta) ** 2 / xi**2 + 2.0 * (1.0 + beta) / xi + 1.0)
        + (1.0 - beta) / xi
        - 1.0
    )


def uncorrelated_closed_form(beta: float, xi: float, rho: float) -> float:
    """Large-system secrecy rate without correlation, in closed form.

    With identity correlation the spectrum is a point mass, E12 = E22,
    and the generic rate collapses to an expression in eta alone.
    """
    if rho <= 0.0:
        raise ModelValidationError(f"rho must be positive, got {rho}")
    g = uncorrelated_eta(beta, xi)
    num = 1.0 + g * (rho + (rho * xi / beta) * (1.0 + g) ** 2) / (rho + (1.0 + g) ** 2)
    den = 1.0 + rho / (1.0 + g) ** 2
    return _clamped_log2_ratio(num, den)


def zf_large_system_rate(
    model: CorrelationModel,
    beta: float,
    rho: float,
    s: FixedPointSettings = DEFAULT_FIXED_POINT,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Large-system secrecy rate of zero forcing.

    Under-loaded (beta < 1): R = log2(1 + rho / chi) with chi solving
    E[chi T / (1 + chi T)] = beta.  Over-loaded (beta > 1): driven by
    the normalization limit (beta - 1) / E[1/T].  At beta = 1 the chi
    equation has no finite solution and the rate is undefined; that
    boundary is reported as an error rather than approximated.
    """
    if rho <= 0.0 or beta <= 0.0:
        raise ModelValidationError(f"rho and beta must be positive, got rho={rho}, beta={beta}")
    if beta == 1.0:
        raise DegenerateParameterError("zero-forcing large-system rate is undefined at beta = 1")
    t, w = spectral_grid(model, q)
    if beta < 1.0:
        # E[chi T / (1 + chi T)] increases from 0 to 1, so the root is unique.
        def balance(chi: float) -> float:
            return float(np.dot(w, chi * t / (1.0 + chi * t))) - beta

        lo, hi = 1e-12, 1.0
        for _ in range(200):
            if balance(hi) > 0.0:
                break
            hi *= 2.0
        else:
            raise ConvergenceError(f"could not bracket the zero-forcing fixed point (beta={beta})")
        chi = brentq(balance, lo, hi, rtol=8.882e-16, maxiter=300)
        return float(np.log2(1.0 + rho / chi))
    gamma0 = (beta - 1.0) / float(np.dot(w, 1.0 / t))
    num = 1.0 + rho / (rho * (beta - 1.0) + beta**2 * gamma0)
    den = 1.0 + rho * (beta - 1.0) / (gamma0 * beta**2)
    return _clamped_log2_ratio(num, den)


def sub_large_system_rate(
    model: CorrelationModel,
    beta: float,
    rho: float,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Large-system secrecy rate of single-user beamforming.

    Depends only on the first two spectral moments; zero for beta >= 1
    at any SNR, and eventually zero in rho for beta < 1.
    """
    if rho <= 0.0 or beta <= 0.0:
        raise ModelValidationError(f"rho and beta must be positive, got rho={rho}, beta={beta}")
    t, w = spectral_grid(model, q)
    m1 = float(np.dot(w, t))
    m2 = float(np.dot(w, t**2))
    num = 1.0 + rho * m1**2 / (beta * (rho * m2 + m1))
    den = 1.0 + rho * m2 / m1
    return _clamped_log2_ratio(num, den)


def toeplitz_exponential_rate(
    nu: float,
    beta: float,
    xi: float,
    rho: float,
    s: FixedPointSettings = DEFAULT_FIXED_POINT,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Closed-form large-system rate for exponential Toeplitz correlation.

    The two moment combinations of the generic rate reduce to the single
    scalar

        c = [xi (1+eta) (1+nu^2) + beta (1-nu^2)]
            / [xi (1+eta) (1-nu^2) + beta (1+nu^2)],

    which equals E22/E12 for this spectrum (c = 1 at nu = 0).
    """
    if rho <= 0.0:
        raise ModelValidationError(f"rho must be positive, got {rho}")
    model = CorrelationModel.toeplitz_exponential(nu)
    eta = solve_eta(model, beta, xi, s, q)
    a = xi * (1.0 + eta)
    c = (a * (1.0 + nu**2) + beta * (1.0 - nu**2)) / (a * (1.0 - nu**2) + beta * (1.0 + nu**2))
    num = 1.0 + eta * (rho * c + (xi * rho / beta) * (1.0 + eta) ** 2) / (rho * c + (1.0 + eta) ** 2)
    den = 1.0 + rho * c / (1.0 + eta) ** 2
    return _clamped_log2_ratio(num, den)
