"""Synthetic rank-(Lr, Lr, 1) tensors with known ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import btd_corcondia
from .ll1 import BlockStructure, FitInfo, Ll1Model, reconstruct
from .tensor import as_tensor, frobenius_norm_sq

__all__ = [
    "SimSpec",
    "SweepRow",
    "SweepResult",
    "generate",
    "add_noise",
    "measured_snr_db",
    "random_transforms",
    "apply_block_transform",
    "snr_sweep",
]


@dataclass(frozen=True)
class SimSpec:
    dims: tuple[int, int, int]
    structure: BlockStructure
    seed: int = 0
    snr_db: float | None = None
    factor_distribution: str = "standard_normal"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite; omit it for a noiseless tensor")
        if self.factor_distribution != "standard_normal":
            raise ValueError(f"unsupported factor distribution {self.factor_distribution!r}")


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    consistency_pct: float
    relative_error: float


@dataclass(frozen=True)
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)


def _ground_truth(spec: SimSpec, rng: np.random.Generator) -> Ll1Model:
    I, J, K = spec.dims
    n = spec.structure.total()
    return Ll1Model(
        rng.standard_normal((I, n)),
        rng.standard_normal((J, n)),
        rng.standard_normal((K, spec.structure.R)),
        spec.structure,
        FitInfo(init="ground_truth", converged=True),
    )


def generate(spec: SimSpec) -> tuple[np.ndarray, Ll1Model]:
    """Draw a ground-truth model and its tensor, with noise if ``snr_db`` is set.

    Factor and noise draws use separate streams derived from ``spec.seed``,
    so the noiseless part of a noisy tensor equals the noiseless tensor for
    the same seed.
    """
    factor_seq, noise_seq = np.random.SeedSequence(spec.seed).spawn(2)
    truth = _ground_truth(spec, np.random.default_rng(factor_seq))
    t = reconstruct(truth)
    if spec.snr_db is not None:
        t = add_noise(t, spec.snr_db, np.random.default_rng(noise_seq))
    return t, truth


def add_noise(t: np.ndarray, snr_db: float, seed=None) -> np.ndarray:
    """Add i.i.d. Gaussian noise rescaled to hit ``snr_db`` exactly."""
    t = as_tensor(t)
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite; omit noise for a noiseless tensor")
    signal = frobenius_norm_sq(t)
    if signal == 0.0:
        raise ValueError("SNR is undefined for a zero tensor")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise = rng.standard_normal(t.shape)
    noise *= math.sqrt(signal / (frobenius_norm_sq(noise) * 10.0 ** (snr_db / 10.0)))
    return t + noise


def measured_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    return 10.0 * math.log10(frobenius_norm_sq(clean) / frobenius_norm_sq(noisy - clean))


def random_transforms(structure: BlockStructure, rng: np.random.Generator,
                      max_cond: float = 1e4) -> list[np.ndarray]:
    """Random nonsingular Lr x Lr matrices with condition number <= max_cond.

    Built as ``Q1 diag(s) Q2`` with Haar-ish orthogonal factors and singular
    values spread log-uniformly over ``[1, max_cond]``.
    """
    out = []
    for L in structure.block_ranks:
        q1, _ = np.linalg.qr(rng.standard_normal((L, L)))
        q2, _ = np.linalg.qr(rng.standard_normal((L, L)))
        log_c = rng.uniform(0.0, math.log10(max_cond))
        s = 10.0 ** rng.uniform(0.0, log_c, size=L)
        s[0], s[-1] = 1.0, 10.0 ** log_c
        out.append((q1 * s) @ q2)
    return out


def apply_block_transform(model: Ll1Model, transforms, max_cond: float = 1e6) -> Ll1Model:
    """``A_r -> A_r F_r`` and ``B_r -> B_r F_r^{-T}``; ``A_r B_r^T`` is unchanged."""
    transforms = [np.atleast_2d(np.asarray(f, dtype=np.float64)) for f in transforms]
    if len(transforms) != model.structure.R:
        raise ValueError(f"need {model.structure.R} transforms, got {len(transforms)}")
    A, B = model.A.copy(), model.B.copy()
    for f, sl, L in zip(transforms, model.structure.slices(), model.structure.block_ranks):
        if f.shape != (L, L):
            raise ValueError(f"transform of shape {f.shape} does not match block rank {L}")
        cond = np.linalg.cond(f)
        if not cond <= max_cond:
            raise ValueError(f"transform condition number {cond:.3g} exceeds {max_cond:g}")
        A[:, sl] = A[:, sl] @ f
        B[:, sl] = B[:, sl] @ np.linalg.inv(f).T
    return Ll1Model(A, B, model.C.copy(), model.structure, model.fit)


def _noisy_factor(m: np.ndarray, snr_db: float, rng) -> np.ndarray:
    noise = rng.standard_normal(m.shape)
    noise *= math.sqrt(frobenius_norm_sq(m[None]) /
                       (frobenius_norm_sq(noise[None]) * 10.0 ** (snr_db / 10.0)))
    return m + noise


def snr_sweep(spec: SimSpec, snr_points) -> SweepResult:
    """Perturb the ground-truth factors at each SNR and score them on the clean tensor.

    Each factor matrix gets its own Gaussian perturbation at the requested
    SNR (relative to that factor's energy). Rows come back in the order of
    ``snr_points``.
    """
    snr_points = [float(s) for s in snr_points]
    if not snr_points:
        raise ValueError("snr_points must be nonempty")
    if len(set(snr_points)) != len(snr_points):
        raise ValueError("snr_points must be distinct")
    clean, truth = generate(SimSpec(spec.dims, spec.structure, spec.seed))
    norm = math.sqrt(frobenius_norm_sq(clean))
    rows = []
    for i, snr in enumerate(snr_points):
        rng = np.random.default_rng([spec.seed, 1, i])
        noisy = Ll1Model(
            _noisy_factor(truth.A, snr, rng),
            _noisy_factor(truth.B, snr, rng),
            _noisy_factor(truth.C, snr, rng),
            truth.structure,
        )
        pct = btd_corcondia(clean, noisy).percentage
        rel = math.sqrt(frobenius_norm_sq(clean - reconstruct(noisy))) / norm
        rows.append(SweepRow(snr, pct, rel))
    return SweepResult(rows)
