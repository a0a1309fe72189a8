"""Rank-(Lr, Lr, 1) block term decomposition fitted by alternating least squares.

A model stores the *expanded* factors of the Tucker form: ``A = [A_1 ... A_R]``
(I x sum L), ``B = [B_1 ... B_R]`` (J x sum L) and ``C = [c_1 ... c_R]`` (K x R).
The 0/1 matrix ``psi`` (R x sum L) maps each column of A and B to its block, so
``C @ psi`` repeats ``c_r`` once per column of block r and the model is the
CPD with factors ``(A, B, C @ psi)``.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .linalg import gevd
from .tensor import as_tensor, frobenius_norm_sq, khatri_rao, mode_n_product, unfold

__all__ = [
    "BlockStructure",
    "FitInfo",
    "FitOptions",
    "Ll1Model",
    "Ll1Warning",
    "reconstruct",
    "reconstruct_rank_one_terms",
    "expand_factors",
    "random_init",
    "gevd_init",
    "als_sweep",
    "fit_ll1",
]


class Ll1Warning(UserWarning):
    """Non-fatal conditions during fitting (small tensor, init fallback)."""


@dataclass(frozen=True)
class BlockStructure:
    block_ranks: tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(int(x) for x in self.block_ranks)
        if len(ranks) < 1:
            raise ValueError("a block structure needs at least one block")
        if any(x < 1 for x in ranks):
            raise ValueError(f"block ranks must be positive, got {ranks}")
        object.__setattr__(self, "block_ranks", ranks)

    @classmethod
    def parse(cls, text: str) -> "BlockStructure":
        """Parse ``"2,2,3"`` or ``"[2, 2, 3]"``."""
        body = text.strip().strip("[]")
        return cls(tuple(int(tok) for tok in body.replace(" ", "").split(",") if tok))

    @property
    def R(self) -> int:
        return len(self.block_ranks)

    def total(self) -> int:
        return sum(self.block_ranks)

    def offsets(self) -> tuple[int, ...]:
        """Column offset of each block inside the expanded factors."""
        return tuple(itertools.accumulate((0,) + self.block_ranks[:-1]))

    def slices(self) -> list[slice]:
        return [slice(o, o + L) for o, L in zip(self.offsets(), self.block_ranks)]

    def canonical(self) -> "BlockStructure":
        return BlockStructure(tuple(sorted(self.block_ranks)))

    def is_cpd(self) -> bool:
        return all(L == 1 for L in self.block_ranks)

    def psi(self) -> np.ndarray:
        """R x sum(L) block-membership matrix."""
        out = np.zeros((self.R, self.total()))
        for r, sl in enumerate(self.slices()):
            out[r, sl] = 1.0
        return out

    def block_of_column(self) -> np.ndarray:
        return np.repeat(np.arange(self.R), self.block_ranks)

    def __str__(self) -> str:
        return "[" + ",".join(str(x) for x in self.block_ranks) + "]"


@dataclass(frozen=True)
class FitInfo:
    final_cost: float = math.nan
    relative_error: float = math.nan
    iterations: int = 0
    init: str = "random"
    converged: bool = False
    used_pinv: bool = False
    init_fallback: bool = False
    restarts_converged: int = 0


@dataclass(frozen=True)
class FitOptions:
    tol: float = 1e-8
    max_iter: int = 500
    restarts: int = 5
    init: str = "gevd"
    seed: int = 0
    # relative error at which a fit is treated as exact; below this the
    # relative cost change is dominated by rounding
    err_floor: float = 1e-12
    normalize: bool = True

    def __post_init__(self):
        if self.init not in ("gevd", "random"):
            raise ValueError(f"init must be 'gevd' or 'random', got {self.init!r}")
        if self.max_iter < 0 or self.restarts < 1:
            raise ValueError("max_iter must be >= 0 and restarts >= 1")
        if not self.tol >= 0:
            raise ValueError("tol must be nonnegative")


@dataclass(frozen=True)
class Ll1Model:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    structure: BlockStructure
    fit: FitInfo = field(default_factory=FitInfo)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        B = np.asarray(self.B, dtype=np.float64)
        C = np.asarray(self.C, dtype=np.float64)
        s = self.structure
        if A.ndim != 2 or B.ndim != 2 or C.ndim != 2:
            raise ValueError("expanded factors must be matrices")
        if A.shape[1] != s.total() or B.shape[1] != s.total() or C.shape[1] != s.R:
            raise ValueError(
                f"factor shapes {A.shape}, {B.shape}, {C.shape} disagree with structure {s}"
            )
        for name, m in (("A", A), ("B", B), ("C", C)):
            if not np.all(np.isfinite(m)):
                raise ValueError(f"factor {name} contains NaN or Inf")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @classmethod
    def from_blocks(cls, blocks, fit: FitInfo | None = None) -> "Ll1Model":
        """Build from a list of ``(A_r, B_r, c_r)`` triples."""
        blocks = list(blocks)
        ranks = tuple(np.atleast_2d(np.asarray(a).T).T.shape[1] for a, _, _ in blocks)
        A = np.hstack([np.asarray(a, dtype=float).reshape(len(a), -1) for a, _, _ in blocks])
        B = np.hstack([np.asarray(b, dtype=float).reshape(len(b), -1) for _, b, _ in blocks])
        C = np.column_stack([np.ravel(c) for _, _, c in blocks])
        return cls(A, B, C, BlockStructure(ranks), fit or FitInfo())

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])

    @property
    def blocks(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        return [
            (self.A[:, sl], self.B[:, sl], self.C[:, r])
            for r, sl in enumerate(self.structure.slices())
        ]

    def with_fit(self, **changes) -> "Ll1Model":
        return replace(self, fit=replace(self.fit, **changes))


def expand_factors(model: Ll1Model) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return model.A, model.B, model.C


def reconstruct(model: Ll1Model) -> np.ndarray:
    """Sum over blocks of ``(A_r B_r^T) outer c_r``."""
    out = np.zeros(model.dims)
    for a, b, c in model.blocks:
        out += (a @ b.T)[:, :, None] * c[None, None, :]
    return out


def reconstruct_rank_one_terms(model: Ll1Model) -> np.ndarray:
    """Same tensor, summed as one rank-one term per column of the expanded A."""
    out = np.zeros(model.dims)
    cols = model.structure.block_of_column()
    for col, r in enumerate(cols):
        out += np.multiply.outer(np.multiply.outer(model.A[:, col], model.B[:, col]), model.C[:, r])
    return out


# --------------------------------------------------------------------------
# fitting
# --------------------------------------------------------------------------


@dataclass
class _Unfoldings:
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    norm_sq: float

    @classmethod
    def of(cls, t: np.ndarray) -> "_Unfoldings":
        return cls(unfold(t, 1), unfold(t, 2), unfold(t, 3), frobenius_norm_sq(t))


def _lstsq_rows(design: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve ``min ||target - X design^T||`` for X; also report rank deficiency."""
    x, _, rank, _ = scipy.linalg.lstsq(
        design, target.T, lapack_driver="gelsy", check_finite=False
    )
    return x.T, rank < design.shape[1]


def _solve_normal(design: np.ndarray, target: np.ndarray, gram: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve ``min ||target - X design^T||`` from the normal equations.

    ``gram`` is ``design^T design``, passed in because callers form it cheaply
    from Hadamard products. Falls back to minimum-norm least squares on the
    explicit design when the Gram matrix is numerically singular.
    """
    rhs = target @ design
    try:
        factor = scipy.linalg.cho_factor(gram, check_finite=False)
        d = np.abs(np.diag(factor[0]))
        if d.min() > 1e-7 * d.max():
            return scipy.linalg.cho_solve(factor, rhs.T, check_finite=False).T, False
    except np.linalg.LinAlgError:
        pass
    x, _ = _lstsq_rows(design, target)
    return x, True


def _sweep(u: _Unfoldings, A, B, C, psi):
    """One ALS pass: A, then B, then C. Returns new factors, cost and pinv flag."""
    Cx = C @ psi
    cc = Cx.T @ Cx
    A, d1 = _solve_normal(khatri_rao(Cx, B), u.x1, cc * (B.T @ B))
    B, d2 = _solve_normal(khatri_rao(Cx, A), u.x2, cc * (A.T @ A))
    M = khatri_rao(B, A) @ psi.T
    C, d3 = _solve_normal(M, u.x3, M.T @ M)
    resid = u.x3 - C @ M.T
    return A, B, C, float(np.vdot(resid, resid)), d1 or d2 or d3


def _cost(u: _Unfoldings, A, B, C, psi) -> float:
    resid = u.x3 - C @ (khatri_rao(B, A) @ psi.T).T
    return float(np.vdot(resid, resid))


def als_sweep(t: np.ndarray, model: Ll1Model) -> Ll1Model:
    """One alternating least-squares pass over A, B and C."""
    t = as_tensor(t)
    if t.shape != model.dims:
        raise ValueError(f"tensor {t.shape} does not match model dims {model.dims}")
    u = _Unfoldings.of(t)
    psi = model.structure.psi()
    A, B, C, cost, pinv = _sweep(u, model.A, model.B, model.C, psi)
    rel = math.sqrt(cost / u.norm_sq) if u.norm_sq > 0 else math.sqrt(cost)
    return Ll1Model(
        A, B, C, model.structure,
        replace(model.fit, final_cost=cost, relative_error=rel,
                iterations=model.fit.iterations + 1,
                used_pinv=model.fit.used_pinv or pinv),
    )


def _solve_c(u: _Unfoldings, A, B, psi) -> np.ndarray:
    C, _ = _lstsq_rows(khatri_rao(B, A) @ psi.T, u.x3)
    return C


def random_init(dims, structure: BlockStructure, rng: np.random.Generator) -> Ll1Model:
    I, J, K = dims
    n = structure.total()
    return Ll1Model(
        rng.standard_normal((I, n)),
        rng.standard_normal((J, n)),
        rng.standard_normal((K, structure.R)),
        structure,
        FitInfo(init="random"),
    )


def _group_eigenvalues(values: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    """Split eigenvalue indices into groups of the given sizes.

    Eigenvalues are ordered along the real axis and cut into consecutive runs;
    the order in which the run sizes appear is chosen to minimize the total
    within-run spread (distinct permutations of ``sizes`` are tried).
    """
    order = np.lexsort((values.imag, values.real))
    v = values[order]
    best, best_perm = math.inf, None
    for perm in sorted(set(itertools.permutations(sizes))):
        spread, start = 0.0, 0
        for L in perm:
            run = v[start:start + L]
            spread += float(np.sum(np.abs(run - run.mean()) ** 2))
            start += L
        if spread < best:
            best, best_perm = spread, perm
    groups, start = [], 0
    for L in best_perm:
        groups.append(order[start:start + L])
        start += L
    # map runs back to blocks: each block takes the first unused run of its size
    out, used = [], [False] * len(groups)
    for L in sizes:
        for g, grp in enumerate(groups):
            if not used[g] and len(grp) == L:
                used[g] = True
                out.append(grp)
                break
    return out


def _real_basis(vecs: np.ndarray, L: int) -> np.ndarray:
    """Real L-dimensional basis of the span of (possibly complex) vectors."""
    stacked = np.hstack([vecs.real, vecs.imag])
    u, _, _ = np.linalg.svd(stacked, full_matrices=False)
    return u[:, :L]


def gevd_init(t: np.ndarray, structure: BlockStructure,
              rng: np.random.Generator | None = None) -> Ll1Model:
    """Initial estimate from the generalized eigenvectors of two pseudo-slices.

    The tensor is compressed to the dominant sum(L)-dimensional subspaces of
    modes 1 and 2, contracted along mode 3 with two random unit vectors, and
    the eigenvectors of the resulting pencil are grouped into blocks. C then
    follows from one least-squares step. Falls back to a random start, with
    ``fit.init_fallback`` set, when the pencil is numerically singular.
    """
    t = as_tensor(t)
    I, J, K = t.shape
    n = structure.total()
    if min(I, J) < n or K < 2:
        raise ValueError(
            f"gevd init needs min(I, J) >= sum(L) = {n} and K >= 2, got dims {t.shape}"
        )
    rng = np.random.default_rng() if rng is None else rng
    u = _Unfoldings.of(t)
    U = np.linalg.svd(u.x1, full_matrices=False)[0][:, :n]
    V = np.linalg.svd(u.x2, full_matrices=False)[0][:, :n]
    w = rng.standard_normal((K, 2))
    w /= np.linalg.norm(w, axis=0)
    core = mode_n_product(mode_n_product(t, U.T, 1), V.T, 2)
    s1 = core @ w[:, 0]
    s2 = core @ w[:, 1]

    def fallback():
        m = random_init(t.shape, structure, rng)
        return m.with_fit(init="gevd", init_fallback=True)

    if np.linalg.cond(s2) > 1e12 or np.linalg.cond(s1) > 1e12:
        return fallback()
    res = gevd(s1, s2)
    if not np.all(np.abs(res.beta) > 1e-14 * np.abs(res.alpha).max()):
        return fallback()
    groups = _group_eigenvalues(res.eigenvalues, structure.block_ranks)
    X = np.hstack([_real_basis(res.eigenvectors[:, g], len(g)) for g in groups])
    if np.linalg.cond(X) > 1e12:
        return fallback()
    # s2 = At D Bt^T with Bt^T X block diagonal, so s2 X spans A blockwise
    A = U @ (s2 @ X)
    B = V @ np.linalg.inv(X).T
    psi = structure.psi()
    C = _solve_c(u, A, B, psi)
    cost = _cost(u, A, B, C, psi)
    rel = math.sqrt(cost / u.norm_sq) if u.norm_sq > 0 else 0.0
    return Ll1Model(A, B, C, structure,
                    FitInfo(final_cost=cost, relative_error=rel, init="gevd"))


def normalize(model: Ll1Model) -> Ll1Model:
    """Put each block in a canonical scaling.

    Block r is rewritten from the SVD ``A_r B_r^T = P S Q^T`` as
    ``A_r = P sqrt(S/s)``, ``B_r = Q sqrt(S/s)``, ``c_r -> s c_r`` with
    ``s = ||S||_F``. For L_r = 1 this gives unit-norm a_r and b_r. Signs are
    fixed so the largest-magnitude entry of each B column is positive.
    Blocks with L_r > min(I, J) are left as they are.
    """
    A, B, C = model.A.copy(), model.B.copy(), model.C.copy()
    for r, sl in enumerate(model.structure.slices()):
        L = sl.stop - sl.start
        if L > min(A.shape[0], B.shape[0]):
            # A_r B_r^T has rank < L_r; no canonical form with L_r columns
            continue
        qa, ra = np.linalg.qr(A[:, sl])
        qb, rb = np.linalg.qr(B[:, sl])
        p, s, qt = np.linalg.svd(ra @ rb.T)
        scale = float(np.linalg.norm(s))
        if scale == 0.0:
            continue
        w = np.sqrt(s / scale)
        ar = (qa @ p[:, :L]) * w
        br = (qb @ qt.T[:, :L]) * w
        idx = np.argmax(np.abs(br), axis=0)
        sign = np.sign(br[idx, np.arange(L)])
        sign[sign == 0] = 1.0
        A[:, sl] = ar * sign
        B[:, sl] = br * sign
        C[:, r] *= scale
    return Ll1Model(A, B, C, model.structure, model.fit)


def _run_als(u: _Unfoldings, start: Ll1Model, opts: FitOptions) -> Ll1Model:
    psi = start.structure.psi()
    A, B, C = start.A, start.B, start.C
    norm_sq = u.norm_sq if u.norm_sq > 0 else 1.0
    prev = _cost(u, A, B, C, psi)
    converged = math.sqrt(prev / norm_sq) <= opts.err_floor
    used_pinv = False
    it = 0
    while not converged and it < opts.max_iter:
        A, B, C, cost, pinv = _sweep(u, A, B, C, psi)
        used_pinv = used_pinv or pinv
        it += 1
        if math.sqrt(cost / norm_sq) <= opts.err_floor or abs(prev - cost) <= opts.tol * prev:
            converged = True
        prev = cost
    return Ll1Model(
        A, B, C, start.structure,
        replace(start.fit, final_cost=prev, relative_error=math.sqrt(prev / norm_sq),
                iterations=it, converged=converged, used_pinv=used_pinv),
    )


def check_structure_fits(dims, structure: BlockStructure) -> None:
    I, J, _ = dims
    if structure.total() > I * J:
        raise ValueError(
            f"sum(L) = {structure.total()} exceeds I*J = {I * J}; the normal equations "
            "are necessarily underdetermined"
        )


def fit_ll1(t: np.ndarray, structure: BlockStructure,
            opts: FitOptions | None = None) -> Ll1Model:
    """Fit a rank-(Lr, Lr, 1) model by ALS, keeping the best of several restarts.

    Never raises on non-convergence; check ``model.fit.converged``.
    """
    opts = FitOptions() if opts is None else opts
    t = as_tensor(t)
    check_structure_fits(t.shape, structure)
    init = opts.init
    if init == "gevd" and min(t.shape) < structure.total():
        warnings.warn(
            f"smallest tensor side {min(t.shape)} < sum(L) = {structure.total()}; "
            "gevd initialisation is unreliable, using random init",
            Ll1Warning, stacklevel=2,
        )
        init = "random"
    u = _Unfoldings.of(t)
    best = None
    n_conv = 0
    for restart in range(opts.restarts):
        rng = np.random.default_rng([opts.seed, restart])
        if init == "gevd":
            start = gevd_init(t, structure, rng)
        else:
            start = random_init(t.shape, structure, rng)
        if init != opts.init:
            start = start.with_fit(init_fallback=True)
        model = _run_als(u, start, opts)
        n_conv += model.fit.converged
        if best is None or model.fit.final_cost < best.fit.final_cost:
            best = model
        if best.fit.relative_error <= opts.err_floor:
            break
    best = best.with_fit(restarts_converged=n_conv)
    return normalize(best) if opts.normalize else best
