import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from btdcorcondia.tensor import (
    as_tensor,
    fold,
    frobenius_norm_sq,
    khatri_rao,
    kronecker,
    mode_n_product,
    unfold,
)

from conftest import rel_diff


def unfold_by_index(t, mode):
    """Place every entry by the index rule: lower-numbered remaining mode fastest."""
    I, J, K = t.shape
    if mode == 1:
        out = np.zeros((I, J * K))
        for i, j, k in itertools.product(range(I), range(J), range(K)):
            out[i, j + k * J] = t[i, j, k]
    elif mode == 2:
        out = np.zeros((J, I * K))
        for i, j, k in itertools.product(range(I), range(J), range(K)):
            out[j, i + k * I] = t[i, j, k]
    else:
        out = np.zeros((K, I * J))
        for i, j, k in itertools.product(range(I), range(J), range(K)):
            out[k, i + j * I] = t[i, j, k]
    return out


def index_tensor(dims):
    t = np.zeros(dims)
    for i, j, k in itertools.product(*map(range, dims)):
        t[i, j, k] = (i + 1) + 2 * j + 4 * k
    return t


def test_unfold_degenerate():
    np.testing.assert_array_equal(unfold(np.array([[[5.0]]]), 1), [[5.0]])


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_unfold_zero(mode):
    z = np.zeros((2, 3, 4))
    m = unfold(z, mode)
    assert not m.any()
    assert m.shape[0] == z.shape[mode - 1] and m.size == z.size


def test_unfold_2x2x2_index_oracle():
    t = index_tensor((2, 2, 2))
    np.testing.assert_array_equal(unfold(t, 1), unfold_by_index(t, 1))
    # row i holds i+2(j-1)+4(k-1) at column j+(k-1)J in 1-based terms
    np.testing.assert_array_equal(unfold(t, 1), [[1, 3, 5, 7], [2, 4, 6, 8]])


def test_fold_mode3_against_index_oracle():
    t = index_tensor((2, 3, 4))
    m = unfold_by_index(t, 3)
    np.testing.assert_array_equal(unfold(t, 3), m)
    np.testing.assert_array_equal(fold(m, 3, t.shape), t)


def test_fold_zero_and_shape_error():
    assert not fold(np.zeros((3, 8)), 2, (2, 3, 4)).any()
    with pytest.raises(ValueError):
        fold(np.zeros((3, 7)), 2, (2, 3, 4))


def test_fold_unfold_exhaustive_to_5():
    rng = np.random.default_rng(0)
    for dims in itertools.product(range(1, 6), repeat=3):
        t = rng.standard_normal(dims)
        for mode in (1, 2, 3):
            m = unfold(t, mode)
            np.testing.assert_array_equal(m, unfold_by_index(t, mode))
            np.testing.assert_array_equal(fold(m, mode, dims), t)
            np.testing.assert_array_equal(unfold(fold(m, mode, dims), mode), m)


def test_bad_mode():
    with pytest.raises(ValueError):
        unfold(np.zeros((2, 2, 2)), 0)


def test_as_tensor_validation():
    with pytest.raises(ValueError):
        as_tensor(np.full((2, 2, 2), np.nan))
    with pytest.raises(ValueError):
        as_tensor(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        as_tensor([1.0, 2.0, 3.0], dims=(2, 2, 1))
    t = as_tensor(np.arange(8.0), dims=(2, 2, 2))
    assert t[1, 0, 0] == 1.0 and t[0, 1, 0] == 2.0 and t[0, 0, 1] == 4.0


def mode_product_by_summation(t, m, mode):
    I, J, K = t.shape
    dims = list(t.shape)
    dims[mode - 1] = m.shape[0]
    out = np.zeros(dims)
    for idx in itertools.product(*map(range, dims)):
        total = 0.0
        for n in range(t.shape[mode - 1]):
            src = list(idx)
            src[mode - 1] = n
            total += m[idx[mode - 1], n] * t[tuple(src)]
        out[idx] = total
    return out


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_mode_product_summation_oracle(rng, mode):
    t = rng.standard_normal((2, 2, 2))
    m = rng.standard_normal((3, 2))
    np.testing.assert_allclose(mode_n_product(t, m, mode), mode_product_by_summation(t, m, mode),
                               rtol=1e-13, atol=1e-14)


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_mode_product_identity_and_zero(rng, mode):
    t = rng.standard_normal((2, 3, 4))
    n = t.shape[mode - 1]
    np.testing.assert_array_equal(mode_n_product(t, np.eye(n), mode), t)
    assert not mode_n_product(np.zeros((2, 3, 4)), rng.standard_normal((5, n)), mode).any()


def test_mode_product_matches_fold_definition(rng):
    t = rng.standard_normal((3, 4, 5))
    m = rng.standard_normal((2, 4))
    expected = fold(m @ unfold(t, 2), 2, (3, 2, 5))
    np.testing.assert_allclose(mode_n_product(t, m, 2), expected, rtol=1e-13)


def test_mode_product_dimension_error(rng):
    with pytest.raises(ValueError):
        mode_n_product(np.zeros((2, 3, 4)), np.zeros((2, 2)), 3)


dims_st = st.tuples(*[st.integers(1, 4)] * 3)


@settings(max_examples=60, deadline=None)
@given(dims=dims_st, mode=st.sampled_from([1, 2, 3]), seed=st.integers(0, 2**32 - 1))
def test_repeated_mode_product_composes(dims, mode, seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(dims)
    m1 = rng.standard_normal((3, dims[mode - 1]))
    m2 = rng.standard_normal((2, 3))
    lhs = mode_n_product(mode_n_product(t, m1, mode), m2, mode)
    assert rel_diff(lhs, mode_n_product(t, m2 @ m1, mode)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(dims=dims_st, seed=st.integers(0, 2**32 - 1))
def test_distinct_mode_products_commute(dims, seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(dims)
    ma = rng.standard_normal((3, dims[0]))
    mb = rng.standard_normal((2, dims[1]))
    lhs = mode_n_product(mode_n_product(t, ma, 1), mb, 2)
    rhs = mode_n_product(mode_n_product(t, mb, 2), ma, 1)
    assert rel_diff(lhs, rhs) < 1e-10


@settings(max_examples=60, deadline=None)
@given(dims=dims_st, mode=st.sampled_from([1, 2, 3]), seed=st.integers(0, 2**32 - 1))
def test_orthonormal_product_preserves_norm(dims, mode, seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(dims)
    q, _ = np.linalg.qr(rng.standard_normal((dims[mode - 1],) * 2))
    before = frobenius_norm_sq(t)
    after = frobenius_norm_sq(mode_n_product(t, q, mode))
    assert abs(after - before) <= 1e-10 * before


def test_khatri_rao_cases(rng):
    a = np.array([[1.0, 2.0, 3.0]])
    b = np.array([[4.0, 5.0, 6.0]])
    np.testing.assert_array_equal(khatri_rao(a, b), [[4.0, 10.0, 18.0]])
    expected = np.zeros((4, 2))
    expected[0, 0] = expected[3, 1] = 1.0
    np.testing.assert_array_equal(khatri_rao(np.eye(2), np.eye(2)), expected)
    a = rng.standard_normal((3, 2))
    b = rng.standard_normal((4, 2))
    kr = khatri_rao(a, b)
    assert kr.shape == (12, 2)
    for c in range(2):
        np.testing.assert_allclose(kr[:, c], np.kron(a[:, c], b[:, c]), rtol=1e-15)
    with pytest.raises(ValueError):
        khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


def test_kronecker_cases(rng):
    np.testing.assert_array_equal(kronecker(np.eye(2), np.eye(3)), np.eye(6))
    m = rng.standard_normal((2, 3))
    np.testing.assert_array_equal(kronecker(np.array([[2.0]]), m), 2 * m)
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2))
    blocks = np.block([[a[0, 0] * b, a[0, 1] * b], [a[1, 0] * b, a[1, 1] * b]])
    np.testing.assert_allclose(kronecker(a, b), blocks, rtol=1e-15)


def test_frobenius_norm_sq(rng):
    assert frobenius_norm_sq(np.zeros((2, 2, 2))) == 0.0
    assert frobenius_norm_sq(np.ones((2, 3, 4))) == 24.0
    t = rng.standard_normal((3, 4, 5))
    naive = sum(float(x) ** 2 for x in t.ravel())
    assert frobenius_norm_sq(t) == pytest.approx(naive, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(*[st.integers(1, 3)] * 3),
              elements=st.one_of(st.just(0.0), st.floats(1e-100, 1e3), st.floats(-1e3, -1e-100))))
def test_norm_zero_iff_zero(t):
    assert frobenius_norm_sq(t) >= 0.0
    assert (frobenius_norm_sq(t) == 0.0) == (not t.any())
