import numpy as np
import pytest

from misosec import (
    CorrelationModel,
    SystemDims,
    build_correlation_matrix,
    hermitian_sqrt,
    sample_channel,
    sample_iid_gaussian,
)
from misosec.errors import ModelValidationError


def test_dims_ratio_exact():
    assert SystemDims(M=64, K=32).beta == 0.5
    assert SystemDims(M=3, K=4).beta == 4.0 / 3.0


def test_dims_validation():
    with pytest.raises(ModelValidationError):
        SystemDims(M=0, K=4)
    with pytest.raises(ModelValidationError):
        SystemDims(M=4, K=0)


def test_sqrt_identity():
    assert np.allclose(hermitian_sqrt(np.eye(5)), np.eye(5), atol=1e-14)


def test_sqrt_diagonal():
    assert np.allclose(hermitian_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)


def test_sqrt_reconstruction_toeplitz():
    R = build_correlation_matrix(CorrelationModel.toeplitz_exponential(0.5), 3)
    S = hermitian_sqrt(R)
    assert np.linalg.norm(S @ S - R) / np.linalg.norm(R) < 1e-10
    assert np.max(np.abs(S - S.conj().T)) == 0.0


def test_sqrt_rejects_non_hermitian():
    with pytest.raises(ModelValidationError):
        hermitian_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_sqrt_rejects_negative_eigenvalue():
    with pytest.raises(ModelValidationError):
        hermitian_sqrt(np.diag([1.0, -1.0]))


def test_same_seed_same_channel():
    dims = SystemDims(M=8, K=4)
    model = CorrelationModel.toeplitz_exponential(0.5)
    a = sample_channel(dims, model, 42).H
    b = sample_channel(dims, model, 42).H
    assert np.array_equal(a, b)
    c = sample_channel(dims, model, 43).H
    assert not np.array_equal(a, c)


def test_identity_model_returns_raw_gaussian():
    dims = SystemDims(M=16, K=8)
    H = sample_channel(dims, CorrelationModel.identity(), 7).H
    assert np.array_equal(H, sample_iid_gaussian(8, 16, 7))


def test_unit_mean_square_magnitude():
    H = sample_iid_gaussian(256, 256, 11)
    assert 0.95 < np.mean(np.abs(H) ** 2) < 1.05


def test_gaussian_structure():
    H = sample_iid_gaussian(256, 256, 12)
    assert abs(np.mean(H.real)) < 0.01
    assert abs(np.var(H.real) - 0.5) < 0.02
    assert abs(np.var(H.imag) - 0.5) < 0.02


def test_column_covariance_single_draw():
    dims = SystemDims(M=256, K=256)
    H = sample_channel(dims, CorrelationModel.toeplitz_exponential(0.5), 13).H
    empirical = (H.conj().T @ H) / dims.K
    assert abs(empirical[0, 1].real - 0.5) < 0.1


def test_column_covariance_ensemble():
    dims = SystemDims(M=128, K=128)
    model = CorrelationModel.toeplitz_exponential(0.5)
    R = build_correlation_matrix(model, dims.M)
    acc = np.zeros((dims.M, dims.M), dtype=complex)
    for seed in range(200):
        H = sample_channel(dims, model, seed).H
        acc += H.conj().T @ H / dims.K
    assert np.max(np.abs(acc / 200 - R)) < 0.05


def test_seed_validation():
    dims = SystemDims(M=4, K=2)
    with pytest.raises(ModelValidationError):
        sample_channel(dims, CorrelationModel.identity(), -1)
    with pytest.raises(ModelValidationError):
        sample_channel(dims, CorrelationModel.identity(), 2**64)


def test_realization_shape_and_finiteness():
    dims = SystemDims(M=12, K=5)
    real = sample_channel(dims, CorrelationModel.toeplitz_exponential(0.9), 3)
    assert real.H.shape == (5, 12)
    assert np.all(np.isfinite(real.H))
    assert real.seed == 3
    assert real.dims == dims
