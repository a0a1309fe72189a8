"""Dense 3-way tensors and the multilinear primitives built on them.

Tensors are plain ``numpy.ndarray`` objects of shape ``(I, J, K)``. The
linearization order is first-index-fastest (Fortran order), and every
unfolding below derives its column order from it: in the mode-n unfolding
the lower-numbered remaining mode varies fastest.

Modes are numbered 1, 2, 3 in the public API.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "as_tensor",
    "unfold",
    "fold",
    "mode_n_product",
    "khatri_rao",
    "kronecker",
    "frobenius_norm_sq",
]


def as_tensor(values, dims=None) -> np.ndarray:
    """Validate and return a finite float64 3-way array.

    If ``dims`` is given, ``values`` may be a flat sequence in
    first-index-fastest order.
    """
    arr = np.asarray(values, dtype=np.float64)
    if dims is not None:
        dims = tuple(int(d) for d in dims)
        if arr.size != int(np.prod(dims)):
            raise ValueError(f"expected {np.prod(dims)} values for dims {dims}, got {arr.size}")
        arr = arr.reshape(dims, order="F")
    if arr.ndim != 3:
        raise ValueError(f"expected a 3-way tensor, got ndim={arr.ndim}")
    if min(arr.shape) < 1:
        raise ValueError(f"tensor dims must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or Inf")
    return arr


def _check_mode(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    return mode - 1


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-n matricization.

    Mode 1 gives I x (J*K) with column ``j + k*J``; mode 2 gives J x (I*K)
    with column ``i + k*I``; mode 3 gives K x (I*J) with column ``i + j*I``.
    """
    n = _check_mode(mode)
    t = np.asarray(t)
    return np.moveaxis(t, n, 0).reshape(t.shape[n], -1, order="F")


def fold(m: np.ndarray, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    n = _check_mode(mode)
    dims = tuple(int(d) for d in dims)
    m = np.asarray(m)
    rest = [d for i, d in enumerate(dims) if i != n]
    expected = (dims[n], rest[0] * rest[1])
    if m.shape != expected:
        raise ValueError(f"mode-{mode} unfolding of {dims} must be {expected}, got {m.shape}")
    return np.moveaxis(m.reshape([dims[n]] + rest, order="F"), 0, n)


def mode_n_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Tensor-matrix product ``t x_n m``."""
    n = _check_mode(mode)
    t = np.asarray(t)
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[1] != t.shape[n]:
        raise ValueError(
            f"matrix of shape {m.shape} cannot multiply mode {mode} of tensor {t.shape}"
        )
    out = np.tensordot(m, t, axes=([1], [n]))
    return np.moveaxis(out, 0, n)


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; column c is ``kron(a[:, c], b[:, c])``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"khatri_rao needs equal column counts, got {a.shape} and {b.shape}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def frobenius_norm_sq(t: np.ndarray) -> float:
    t = np.asarray(t, dtype=np.float64)
    return float(np.vdot(t, t))
