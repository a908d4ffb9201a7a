"""Selection of the secrecy-rate-maximizing regularization parameter.

Large system: the optimal regularization solves the fixed-point equation

    xi = beta [ (eta^2 - 1) E12 - rho E22 ] / (2 rho eta (1 + eta) E12 )

whose roots are exactly the stationary points of the limiting rate.  The
quotient map oscillates (and its right-hand side can go negative at low
SNR under strong correlation), so a damped iteration from the
no-secrecy optimum beta/rho is tried first and two fallbacks make the
search unconditional: bisection on sign changes of the analytic rate
derivative over a log-spaced bracket, then golden-section maximization
of the rate itself.

Finite system: the per-realization optimum is located by golden-section
search on log(xi), maximizing the exact sum rate for one channel draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .asymptotics import (
    DEFAULT_FIXED_POINT,
    FixedPointSettings,
    rci_large_system_rate,
)
from .correlation import DEFAULT_QUADRATURE, CorrelationModel, QuadratureSettings
from .errors import ModelValidationError
from .precoders import rci_precoder
from .secrecy import per_user_secrecy_rates

METHOD_FIXED_POINT = "fixed-point"
METHOD_DERIVATIVE = "derivative-bisection"
METHOD_GOLDEN = "golden-section"

DEFAULT_XI_BRACKET = (1e-6, 1e3)

# Damped iteration warm-started at the no-secrecy optimum beta/rho.
XI_FIXED_POINT_SETTINGS = FixedPointSettings(tolerance=1e-12, max_iterations=500, damping=0.5)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class XiSolution:
    """A located regularization parameter.

    residual is method-specific: the fixed-point defect |xi - rhs(xi)|,
    the analytic derivative magnitude at a bisection root, or the final
    relative bracket width of a golden-section search.
    """

    xi: float
    residual: float
    method: str
    iterations: int
    converged: bool = True
    flat_objective: bool = False
    warning: str | None = None


@dataclass(frozen=True)
class DerivativeBundle:
    """Analytic derivative of the large-system rate with respect to xi,
    together with the intermediate quantities it is assembled from.

    lambda_c is the moment combination
    [2 eta' (1+eta) E12 E22 + (1+eta)^2 (E12' E22 - E22' E12)] / eta'.
    clamped marks points where the rate sits at its zero clamp, where
    the reported derivative is 0.
    """

    eta_prime: float
    e12_prime: float
    e22_prime: float
    chi: float
    z: float
    psi: float
    phi: float
    lambda_c: float
    derivative: float
    clamped: bool = False


def rate_derivative_wrt_xi(
    model: CorrelationModel,
    beta: float,
    rho: float,
    xi: float,
    s: FixedPointSettings = DEFAULT_FIXED_POINT,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> DerivativeBundle:
    """Analytic d(rate)/d(xi) for regularized channel inversion.

    Differentiates through the eta fixed point:
    eta' = -(1+eta)^2 E12 / (1 - beta E22), and the moment derivatives
    reduce to third-order moments via
    E12' E22 - E22' E12 = -2 beta (1 + eta + xi eta') (E13 E33 - E23^2).
    """
    de = rci_large_system_rate(model, beta, xi, rho, s, q)
    eta = de.eta
    e12, e22 = de.moments[(1, 2)], de.moments[(2, 2)]
    e13, e23, e33 = de.moments[(1, 3)], de.moments[(2, 3)], de.moments[(3, 3)]
    eta_prime = -((1.0 + eta) ** 2) * e12 / (1.0 - beta * e22)
    shift = 1.0 + eta + xi * eta_prime
    e12_prime = -2.0 * shift * e13
    e22_prime = -2.0 * shift * e23
    cross = -2.0 * beta * shift * (e13 * e33 - e23**2)  # E12' E22 - E22' E12
    chi = (1.0 + eta) ** 2 * e12
    z = (beta * e22 + xi * chi) * (rho * e22 + chi)
    psi = (beta * e22 + xi * chi) / (rho * e22 + chi)
    lambda_c = (2.0 * eta_prime * (1.0 + eta) * e12 * e22 + (1.0 + eta) ** 2 * cross) / eta_prime
    phi = rho**2 * psi * eta * lambda_c / (beta * z)
    clamped = de.rate == 0.0
    if clamped:
        derivative = 0.0
    else:
        prefactor = eta_prime / (
            2.0**de.rate * rho * chi**2 * beta * (1.0 + rho * e22 / chi) ** 2 * math.log(2.0)
        )
        bracket = (
            phi * (rho * xi - beta) * (chi**2 + rho * chi * e22) * beta
            + rho**2 * lambda_c * (beta + rho * eta * psi)
        )
        derivative = prefactor * bracket
    return DerivativeBundle(
        eta_prime=eta_prime,
        e12_prime=e12_prime,
        e22_prime=e22_prime,
        chi=chi,
        z=z,
        psi=psi,
        phi=phi,
        lambda_c=lambda_c,
        derivative=derivative,
        clamped=clamped,
    )


def _golden_section_log(objective, lo: float, hi: float, log_tol: float):
    """Golden-section maximization of objective(xi) on a log-xi bracket.

    Returns (xi, iterations, final log width).
    """
    a, b = math.log(lo), math.log(hi)
    c = b - (b - a) * _INV_PHI
    d = a + (b - a) * _INV_PHI
    fc, fd = objective(math.exp(c)), objective(math.exp(d))
    iterations = 0
    while b - a > log_tol:
        iterations += 1
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INV_PHI
            fc = objective(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INV_PHI
            fd = objective(math.exp(d))
    return math.exp(0.5 * (a + b)), iterations, b - a


def optimal_xi_large_system(
    model: CorrelationModel,
    beta: float,
    rho: float,
    s: FixedPointSettings | None = None,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
    bracket: tuple[float, float] = DEFAULT_XI_BRACKET,
) -> XiSolution:
    """Regularization maximizing the large-system secrecy rate.

    The damped fixed-point iteration is accepted only if it converges to
    a positive value that dominates a log-spaced rate scan of the
    bracket; otherwise sign changes of the analytic derivative are
    bisected and the best root taken, and if no root exists the rate is
    maximized directly by golden section.  The method actually used is
    recorded on the solution.
    """
    if rho <= 0.0 or beta <= 0.0:
        raise ModelValidationError(f"rho and beta must be positive, got rho={rho}, beta={beta}")
    if s is None:
        s = XI_FIXED_POINT_SETTINGS
    lo, hi = bracket
    if not 0.0 < lo < hi:
        raise ModelValidationError(f"invalid bracket {bracket}")

    def rate_at(xi: float) -> float:
        return rci_large_system_rate(model, beta, xi, rho, s=DEFAULT_FIXED_POINT, q=q).rate

    def deriv_at(xi: float) -> float:
        return rate_derivative_wrt_xi(model, beta, rho, xi, s=DEFAULT_FIXED_POINT, q=q).derivative

    def rhs(xi: float) -> float:
        de = rci_large_system_rate(model, beta, xi, rho, s=DEFAULT_FIXED_POINT, q=q)
        e12, e22 = de.moments[(1, 2)], de.moments[(2, 2)]
        eta = de.eta
        return beta * ((eta**2 - 1.0) * e12 - rho * e22) / (2.0 * rho * eta * (1.0 + eta) * e12)

    grid = np.geomspace(lo, hi, 200)
    rates = None  # filled lazily; the fixed point usually succeeds

    xi = beta / rho
    fp_result = None
    for iteration in range(s.max_iterations):
        try:
            target = rhs(xi)
        except Exception:
            break
        nxt = (1.0 - s.damping) * xi + s.damping * target
        if nxt <= 0.0 or not math.isfinite(nxt) or nxt > 1e9:
            break
        if abs(nxt - xi) <= s.tolerance * max(1.0, abs(nxt)):
            fp_result = XiSolution(
                xi=nxt,
                residual=abs(nxt - rhs(nxt)),
                method=METHOD_FIXED_POINT,
                iterations=iteration + 1,
            )
            break
        xi = nxt

    if fp_result is not None:
        rates = np.array([rate_at(g) for g in grid])
        if rate_at(fp_result.xi) >= rates.max() - 1e-9:
            return fp_result
        # converged to a non-global stationary point; fall through

    if rates is None:
        rates = np.array([rate_at(g) for g in grid])

    derivs = np.array([deriv_at(g) for g in grid])
    candidates: list[float] = []
    for i in range(len(grid) - 1):
        if derivs[i] * derivs[i + 1] < 0.0:
            candidates.append(brentq(deriv_at, grid[i], grid[i + 1], rtol=8.882e-16, maxiter=200))
    if candidates:
        best = max(candidates, key=rate_at)
        if rate_at(best) >= rates.max() - 1e-9:
            return XiSolution(
                xi=best,
                residual=abs(deriv_at(best)),
                method=METHOD_DERIVATIVE,
                iterations=len(candidates),
            )

    if rates.max() <= 0.0:
        return XiSolution(
            xi=math.sqrt(lo * hi),
            residual=0.0,
            method=METHOD_GOLDEN,
            iterations=0,
            converged=False,
            warning="rate is zero throughout the bracket",
        )
    xi_g, iterations, width = _golden_section_log(rate_at, lo, hi, log_tol=1e-10)
    warning = None
    if xi_g <= lo * (1.0 + 1e-6) or xi_g >= hi * (1.0 - 1e-6):
        warning = "no interior stationary point; returning the bracket endpoint maximizing the rate"
    return XiSolution(
        xi=xi_g,
        residual=width,
        method=METHOD_GOLDEN,
        iterations=iterations,
        converged=warning is None,
        warning=warning,
    )


def optimal_xi_finite(
    H: np.ndarray,
    rho: float,
    bracket: tuple[float, float] = DEFAULT_XI_BRACKET,
) -> XiSolution:
    """Per-realization optimal regularization for one channel draw.

    Golden-section search on log(xi) maximizing the exact secrecy sum
    rate, refined to relative bracket width 1e-4.  A flat objective
    (e.g. the single-user case, where the normalization cancels xi
    exactly) is detected on a coarse pre-scan and flagged instead of
    pretending a maximizer exists.
    """
    if rho <= 0.0:
        raise ModelValidationError(f"rho must be positive, got {rho}")
    lo, hi = bracket
    if not 0.0 < lo < hi:
        raise ModelValidationError(f"invalid bracket {bracket}")
    H = np.asarray(H, dtype=complex)

    def objective(xi: float) -> float:
        return per_user_secrecy_rates(H, rci_precoder(H, xi), rho).sum_rate

    probe = np.geomspace(lo, hi, 9)
    values = np.array([objective(x) for x in probe])
    spread = values.max() - values.min()
    if spread <= 1e-12 * max(1.0, abs(values.max())):
        return XiSolution(
            xi=math.sqrt(lo * hi),
            residual=0.0,
            method=METHOD_GOLDEN,
            iterations=0,
            flat_objective=True,
        )
    xi, iterations, width = _golden_section_log(objective, lo, hi, log_tol=1e-4)
    return XiSolution(xi=xi, residual=width, method=METHOD_GOLDEN, iterations=iterations)
