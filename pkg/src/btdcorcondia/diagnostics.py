"""Core consistency for rank-(Lr, Lr, 1) block term decompositions.

The ideal core holds an Lr x Lr identity in frontal slice r at row/column
offset ``L_1 + ... + L_{r-1}``. The least-squares Tucker core of the data
under the fitted expanded factors is compared with it:

    consistency = (1 - ||ideal - core||^2 / ||ideal||^2) * 100,

capped at 100 and not floored. With every Lr = 1 this is the classic CPD
core consistency.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import numerical_rank, pseudoinverse
from .ll1 import BlockStructure, Ll1Model
from .tensor import as_tensor, frobenius_norm_sq, kronecker, mode_n_product

__all__ = [
    "CoreTensor",
    "ConsistencyResult",
    "ideal_core",
    "compute_core",
    "compute_core_kronecker",
    "consistency",
    "btd_corcondia",
]


@dataclass(frozen=True)
class CoreTensor:
    values: np.ndarray
    structure: BlockStructure
    rank_deficient: bool = False

    def __post_init__(self):
        n = self.structure.total()
        if self.values.shape != (n, n, self.structure.R):
            raise ValueError(
                f"core of shape {self.values.shape} does not match structure {self.structure}"
            )


@dataclass(frozen=True)
class ConsistencyResult:
    percentage: float
    core: CoreTensor
    structure: BlockStructure


def ideal_core(structure: BlockStructure) -> np.ndarray:
    n = structure.total()
    out = np.zeros((n, n, structure.R))
    for r, sl in enumerate(structure.slices()):
        idx = np.arange(sl.start, sl.stop)
        out[idx, idx, r] = 1.0
    return out


def compute_core(t: np.ndarray, model: Ll1Model) -> CoreTensor:
    """Least-squares core ``G`` minimizing ``||t - G x1 A x2 B x3 C||``.

    Computed as ``t x1 A+ x2 B+ x3 C+``. Because the pseudoinverse of a
    Kronecker product is the Kronecker product of the pseudoinverses, this is
    the minimum-norm solution even when an expanded factor loses column rank;
    that case is flagged ``rank_deficient``.
    """
    t = as_tensor(t)
    if t.shape != model.dims:
        raise ValueError(f"tensor {t.shape} does not match model dims {model.dims}")
    factors = (model.A, model.B, model.C)
    deficient = any(numerical_rank(m) < m.shape[1] for m in factors)
    g = t
    for mode, m in enumerate(factors, start=1):
        g = mode_n_product(g, pseudoinverse(m), mode)
    return CoreTensor(g, model.structure, rank_deficient=deficient)


def compute_core_kronecker(t: np.ndarray, model: Ll1Model) -> CoreTensor:
    """Same core from the explicit system ``vec(t) = (C kron B kron A) vec(G)``.

    Materializes an (I*J*K) x (sum(L)^2 * R) matrix; only for small problems.
    """
    t = as_tensor(t)
    big = kronecker(model.C, kronecker(model.B, model.A))
    vec_g = pseudoinverse(big) @ t.reshape(-1, order="F")
    n = model.structure.total()
    g = vec_g.reshape((n, n, model.structure.R), order="F")
    return CoreTensor(g, model.structure,
                      rank_deficient=numerical_rank(big) < big.shape[1])


def consistency(core: CoreTensor) -> ConsistencyResult:
    ideal = ideal_core(core.structure)
    pct = (1.0 - frobenius_norm_sq(ideal - core.values) / frobenius_norm_sq(ideal)) * 100.0
    return ConsistencyResult(min(100.0, pct), core, core.structure)


def btd_corcondia(t: np.ndarray, model: Ll1Model) -> ConsistencyResult:
    return consistency(compute_core(t, model))
