import numpy as np
import pytest

from misosec import (
    CorrelationModel,
    SystemDims,
    rci_precoder,
    sample_channel,
    sub_precoder,
    zf_precoder,
)
from misosec.errors import ModelValidationError, SingularChannelError


def draw(M, K, seed, nu=0.5):
    model = CorrelationModel.toeplitz_exponential(nu) if nu else CorrelationModel.identity()
    return sample_channel(SystemDims(M=M, K=K), model, seed).H


# -------------------------------------------------------------------- RCI


def test_rci_scalar():
    out = rci_precoder(np.array([[1.0 + 0j]]), 1.0)
    assert out.W[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert out.gamma == pytest.approx(0.25, abs=1e-15)
    assert out.xi == 1.0


def test_rci_gamma_is_trace_of_gram():
    # the two normalization expressions are one trace (push-through)
    rng = np.random.default_rng(0)
    for trial in range(100):
        K = int(rng.integers(1, 9))
        M = int(rng.integers(1, 9))
        xi = float(10 ** rng.uniform(-2, 1))
        H = draw(M, K, 1000 + trial)
        out = rci_precoder(H, xi)
        assert abs(np.sum(np.abs(out.W) ** 2) - out.gamma) < 1e-10


def test_rci_matches_direct_solve():
    H = draw(8, 4, 5)
    xi = 0.1
    out = rci_precoder(H, xi)
    oracle = np.linalg.solve(H @ H.conj().T + xi * 8 * np.eye(4), H).conj().T
    assert np.max(np.abs(out.W - oracle)) < 1e-10


def test_rci_rejects_nonpositive_xi():
    H = draw(4, 2, 6)
    with pytest.raises(ModelValidationError):
        rci_precoder(H, 0.0)
    with pytest.raises(ModelValidationError):
        rci_precoder(H, -1.0)


# --------------------------------------------------------------------- ZF


def test_zf_right_inverse_underloaded():
    H = draw(8, 4, 7)
    out = zf_precoder(H)
    assert np.max(np.abs(H @ out.W - np.eye(4))) < 1e-9


def test_zf_scalar():
    out = zf_precoder(np.array([[2.0 + 0j]]))
    assert out.W[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert out.gamma == pytest.approx(0.25, abs=1e-15)


def test_zf_is_pseudo_inverse_both_loadings():
    for M, K in ((8, 5), (5, 8)):
        H = draw(M, K, 8)
        out = zf_precoder(H)
        assert out.W.shape == (M, K)
        assert np.max(np.abs(out.W - np.linalg.pinv(H))) < 1e-9
        assert out.gamma == pytest.approx(np.sum(np.abs(out.W) ** 2), abs=1e-12)


def test_zf_singular_channel_rejected():
    H = draw(8, 3, 9)
    H[2] = H[1]  # duplicated user makes the Gram matrix singular
    with pytest.raises(SingularChannelError):
        zf_precoder(H)


# -------------------------------------------------------------------- SUB


def test_sub_scalar():
    out = sub_precoder(np.array([[3.0 + 0j]]))
    assert out.W[0, 0] == pytest.approx(3.0)
    assert out.gamma == pytest.approx(9.0)


def test_sub_gamma_is_sum_of_squared_entries():
    H = draw(6, 4, 10)
    out = sub_precoder(H)
    assert abs(out.gamma - np.sum(np.abs(H) ** 2)) < 1e-10
    assert np.array_equal(out.W, H.conj().T)


def test_sub_rejects_zero_channel():
    with pytest.raises(ModelValidationError):
        sub_precoder(np.zeros((2, 4), dtype=complex))


# ------------------------------------------------------------------ limits


def test_rci_large_xi_approaches_matched_filter():
    H = draw(8, 6, 11)
    xi = 1e6
    scaled = rci_precoder(H, xi).W * (xi * 8)
    target = sub_precoder(H).W
    assert np.max(np.abs(scaled - target)) / np.max(np.abs(target)) < 1e-3


def _column_alignment(A, B):
    # worst-case deviation of normalized columns, ignoring phase
    out = 0.0
    for k in range(A.shape[1]):
        a = A[:, k] / np.linalg.norm(A[:, k])
        b = B[:, k] / np.linalg.norm(B[:, k])
        out = max(out, 1.0 - abs(np.vdot(a, b)))
    return out


def test_rci_small_xi_aligns_with_zf():
    H = draw(12, 6, 12)
    assert _column_alignment(rci_precoder(H, 1e-8).W, zf_precoder(H).W) < 1e-3


def test_rci_large_xi_aligns_with_sub():
    H = draw(12, 6, 13)
    assert _column_alignment(rci_precoder(H, 1e8).W, sub_precoder(H).W) < 1e-3
