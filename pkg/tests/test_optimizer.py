import numpy as np
import pytest

from misosec import (
    CorrelationModel,
    SystemDims,
    optimal_xi_finite,
    optimal_xi_large_system,
    per_user_secrecy_rates,
    rate_derivative_wrt_xi,
    rci_large_system_rate,
    rci_precoder,
    sample_channel,
)
from misosec.errors import ModelValidationError
from misosec.optimizer import METHOD_FIXED_POINT, _golden_section_log

TE_HALF = CorrelationModel.toeplitz_exponential(0.5)


def rate_at(model, beta, rho, xi):
    return rci_large_system_rate(model, beta, xi, rho).rate


def fd_derivative(model, beta, rho, xi, h_rel=1e-6):
    h = h_rel * xi
    return (rate_at(model, beta, rho, xi + h) - rate_at(model, beta, rho, xi - h)) / (2 * h)


# ----------------------------------------------------------- large system


def test_solution_is_stationary():
    sol = optimal_xi_large_system(TE_HALF, 1.0, 10.0)
    assert sol.converged
    assert abs(fd_derivative(TE_HALF, 1.0, 10.0, sol.xi, h_rel=1e-5)) < 1e-6


def test_solution_dominates_log_grid():
    sol = optimal_xi_large_system(TE_HALF, 0.8, 10.0)
    best = max(rate_at(TE_HALF, 0.8, 10.0, g) for g in np.geomspace(1e-4, 1e3, 200))
    assert rate_at(TE_HALF, 0.8, 10.0, sol.xi) >= best - 1e-9


def test_optimum_differs_from_no_secrecy_value():
    # with secrecy constraints the optimum moves away from beta/rho
    sol = optimal_xi_large_system(TE_HALF, 1.0, 10.0)
    assert abs(sol.xi - 0.1) / 0.1 > 0.01


def test_fallback_engages_when_fixed_point_leaves_domain():
    # at low SNR under correlation the quotient map goes negative
    sol = optimal_xi_large_system(TE_HALF, 1.0, 1.0)
    assert sol.method != METHOD_FIXED_POINT
    assert sol.converged
    assert abs(fd_derivative(TE_HALF, 1.0, 1.0, sol.xi, h_rel=1e-5)) < 1e-6


def test_fixed_point_agrees_with_golden_section():
    sol = optimal_xi_large_system(CorrelationModel.identity(), 1.0, 10.0)
    assert sol.method == METHOD_FIXED_POINT
    xi_gs, _, _ = _golden_section_log(
        lambda x: rate_at(CorrelationModel.identity(), 1.0, 10.0, x), 1e-6, 1e3, log_tol=1e-10
    )
    assert abs(sol.xi - xi_gs) / xi_gs < 1e-3


def test_validation():
    with pytest.raises(ModelValidationError):
        optimal_xi_large_system(TE_HALF, 0.0, 10.0)
    with pytest.raises(ModelValidationError):
        optimal_xi_large_system(TE_HALF, 1.0, 10.0, bracket=(1.0, 0.1))


# -------------------------------------------------------------- derivative


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 8:
        nu = float(rng.uniform(0.0, 0.9))
        beta = float(rng.uniform(0.3, 1.8))
        rho = float(10 ** rng.uniform(-0.5, 1.5))
        xi = float(10 ** rng.uniform(-2, 0.5))
        model = CorrelationModel.toeplitz_exponential(nu)
        bundle = rate_derivative_wrt_xi(model, beta, rho, xi)
        if bundle.clamped:
            continue
        fd = fd_derivative(model, beta, rho, xi)
        assert abs(bundle.derivative - fd) / max(abs(fd), 1e-12) < 1e-4
        checked += 1


def test_derivative_sign_flips_across_optimum():
    sol = optimal_xi_large_system(TE_HALF, 1.0, 10.0)
    below = rate_derivative_wrt_xi(TE_HALF, 1.0, 10.0, sol.xi * 0.9).derivative
    above = rate_derivative_wrt_xi(TE_HALF, 1.0, 10.0, sol.xi * 1.1).derivative
    assert below > 0.0
    assert above < 0.0


def test_bundle_sign_structure():
    for nu, beta, rho, xi in ((0.0, 0.8, 10.0, 0.1), (0.5, 1.2, 3.0, 0.5), (0.7, 0.5, 30.0, 0.02)):
        model = CorrelationModel.toeplitz_exponential(nu) if nu else CorrelationModel.identity()
        bundle = rate_derivative_wrt_xi(model, beta, rho, xi)
        assert bundle.eta_prime < 0.0
        assert bundle.chi > 0.0
        assert bundle.z > 0.0
        assert bundle.e12_prime < 0.0
        assert bundle.e22_prime < 0.0


def test_derivative_reported_zero_when_clamped():
    # overloaded system at huge regularization sits at the zero clamp
    bundle = rate_derivative_wrt_xi(CorrelationModel.identity(), 1.5, 10.0, 1e6)
    assert bundle.clamped
    assert bundle.derivative == 0.0


# ------------------------------------------------------------ finite system


def test_finite_optimum_beats_large_system_value():
    H = sample_channel(SystemDims(M=16, K=16), TE_HALF, 31).H
    rho = 10.0
    sol = optimal_xi_finite(H, rho)
    xi_ls = optimal_xi_large_system(TE_HALF, 1.0, rho).xi
    r_star = per_user_secrecy_rates(H, rci_precoder(H, sol.xi), rho).sum_rate
    r_ls = per_user_secrecy_rates(H, rci_precoder(H, xi_ls), rho).sum_rate
    assert r_star >= r_ls - 1e-9


def test_finite_optimum_dominates_grid():
    H = sample_channel(SystemDims(M=12, K=10), TE_HALF, 32).H
    rho = 10.0
    sol = optimal_xi_finite(H, rho)
    r_star = per_user_secrecy_rates(H, rci_precoder(H, sol.xi), rho).sum_rate
    grid_best = max(
        per_user_secrecy_rates(H, rci_precoder(H, x), rho).sum_rate
        for x in np.geomspace(1e-4, 1e2, 100)
    )
    assert r_star >= grid_best - 1e-6


def test_single_user_objective_is_flat():
    # normalization cancels the regularization exactly in the scalar case
    H = sample_channel(SystemDims(M=1, K=1), CorrelationModel.identity(), 33).H
    sol = optimal_xi_finite(H, 10.0)
    assert sol.flat_objective
    rates = [
        per_user_secrecy_rates(H, rci_precoder(H, x), 10.0).sum_rate
        for x in np.geomspace(1e-6, 1e3, 7)
    ]
    assert max(rates) - min(rates) < 1e-12
