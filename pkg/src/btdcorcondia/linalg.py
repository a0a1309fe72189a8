"""Dense factorizations used by the fitting loop and the diagnostic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "SvdResult",
    "GevdResult",
    "svd",
    "default_rank_tol",
    "pseudoinverse",
    "solve_least_squares",
    "gevd",
]


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray


@dataclass(frozen=True)
class GevdResult:
    """Generalized eigenpairs of ``m1 v = (alpha / beta) m2 v``.

    Eigenvalues are kept in homogeneous form so that a singular ``m2``
    shows up as ``beta`` close to zero instead of an overflow.
    """

    alpha: np.ndarray
    beta: np.ndarray
    eigenvectors: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.alpha / self.beta


def svd(m: np.ndarray) -> SvdResult:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"svd needs a non-empty matrix, got shape {m.shape}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return SvdResult(u, s, vt)


def default_rank_tol(shape) -> float:
    return 1e-12 * max(shape)


def pseudoinverse(m: np.ndarray, rank_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``rank_tol * s_max`` are treated as zero. The
    default cutoff is ``1e-12 * max(rows, cols)``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"pseudoinverse needs a non-empty matrix, got shape {m.shape}")
    if rank_tol is None:
        rank_tol = default_rank_tol(m.shape)
    if rank_tol < 0:
        raise ValueError("rank_tol must be nonnegative")
    res = svd(m)
    s = res.singular_values
    keep = s > rank_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (res.vt.T * inv_s) @ res.u.T


def numerical_rank(m: np.ndarray, rank_tol: float | None = None) -> int:
    m = np.asarray(m, dtype=np.float64)
    if rank_tol is None:
        rank_tol = default_rank_tol(m.shape)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def solve_least_squares(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of ``min ||a x - b||_F``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.shape[0] != a.shape[0]:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    return x


def gevd(m1: np.ndarray, m2: np.ndarray) -> GevdResult:
    """QZ-based generalized eigendecomposition of the pencil (m1, m2)."""
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    if m1.ndim != 2 or m1.shape[0] != m1.shape[1] or m1.shape != m2.shape:
        raise ValueError(f"gevd needs two square matrices of equal size, got {m1.shape}, {m2.shape}")
    w, v = scipy.linalg.eig(m1, m2, homogeneous_eigvals=True)
    return GevdResult(alpha=w[0], beta=w[1], eigenvectors=v)
