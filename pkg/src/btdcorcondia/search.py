"""Grid search over block structures, scored by mean core consistency.

Candidates are ranked by mean consistency at report precision (two
decimals); ties go to the larger sum(L), then the larger R. Underfit models
sit at or near 100% (any single-block model is exactly 100% at a stationary
point), so the most complex model that keeps full consistency is preferred.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import btd_corcondia
from .ll1 import BlockStructure, FitOptions, fit_ll1
from .tensor import as_tensor

REPORT_DECIMALS = 2

__all__ = [
    "SearchSpace",
    "ReportRow",
    "ConsistencyReport",
    "enumerate_structures",
    "cell_seed",
    "grid_search",
]


@dataclass(frozen=True)
class SearchSpace:
    max_R: int
    max_L: int
    include_cpd: bool = True

    def __post_init__(self):
        if self.max_R < 1 or self.max_L < 1:
            raise ValueError("max_R and max_L must be >= 1")


@dataclass(frozen=True)
class ReportRow:
    structure: BlockStructure
    mean_pct: float | None
    sd_pct: float | None
    mean_relative_error: float | None
    repeats: int
    failures: int
    scores: tuple[float, ...] = ()

    def sort_key(self):
        s = self.structure
        missing = self.mean_pct is None
        pct = 0.0 if missing else round(self.mean_pct, REPORT_DECIMALS)
        return (missing, -pct, -s.total(), -s.R, s.block_ranks)


@dataclass
class ConsistencyReport:
    rows: list[ReportRow] = field(default_factory=list)
    skipped: list[tuple[BlockStructure, str]] = field(default_factory=list)

    def top(self, n: int = 10) -> list[ReportRow]:
        return self.rows[:n]

    def row_for(self, structure: BlockStructure) -> ReportRow:
        key = structure.canonical()
        for row in self.rows:
            if row.structure == key:
                return row
        raise KeyError(str(structure))


def enumerate_structures(space: SearchSpace) -> list[BlockStructure]:
    """All nondecreasing block-rank multisets, by R then lexicographically.

    Every all-ones structure with R <= max_R is part of this set already, so
    ``include_cpd`` only matters as a guard that they are never filtered out.
    """
    out = []
    for R in range(1, space.max_R + 1):
        for combo in itertools.combinations_with_replacement(range(1, space.max_L + 1), R):
            out.append(BlockStructure(combo))
    if not space.include_cpd:
        return out
    have = set(out)
    extra = [BlockStructure((1,) * R) for R in range(1, space.max_R + 1)]
    return out + [s for s in extra if s not in have]


def cell_seed(seed: int, candidate: int, repeat: int) -> int:
    return int(np.random.SeedSequence([seed, candidate, repeat]).generate_state(1)[0])


def _run_cell(args):
    t, structure, opts = args
    model = fit_ll1(t, structure, opts)
    if not model.fit.converged:
        return None
    return btd_corcondia(t, model).percentage, model.fit.relative_error


def _summarize(structure, results, repeats) -> ReportRow:
    ok = [r for r in results if r is not None]
    if not ok:
        return ReportRow(structure, None, None, None, repeats, repeats)
    pct = np.array([r[0] for r in ok])
    err = np.array([r[1] for r in ok])
    sd = float(pct.std(ddof=1)) if len(pct) > 1 else 0.0
    return ReportRow(structure, float(pct.mean()), sd, float(err.mean()),
                     repeats, repeats - len(ok), tuple(float(p) for p in pct))


def grid_search(t: np.ndarray, space: SearchSpace, repeats: int = 20, seed: int = 0,
                fit_opts: FitOptions | None = None, threads: int | None = 1,
                structures: list[BlockStructure] | None = None) -> ConsistencyReport:
    """Fit every candidate ``repeats`` times and rank by mean consistency.

    Each (candidate, repeat) fit is seeded from ``(seed, candidate index,
    repeat index)``, so serial and parallel runs give identical reports.
    Fits that do not converge count as failures and are left out of the
    mean and SD. ``threads=None`` uses every available CPU.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    t = as_tensor(t)
    fit_opts = FitOptions(restarts=1) if fit_opts is None else fit_opts
    candidates = enumerate_structures(space) if structures is None else list(structures)
    I, J, _ = t.shape
    report = ConsistencyReport()
    cells, owners = [], []
    for idx, structure in enumerate(candidates):
        if structure.total() > I * J:
            report.skipped.append((structure, f"sum(L)={structure.total()} > I*J={I * J}"))
            continue
        for rep in range(repeats):
            cells.append((t, structure, replace(fit_opts, seed=cell_seed(seed, idx, rep))))
            owners.append(idx)
    workers = (os.cpu_count() or 1) if threads is None else max(1, threads)
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (8 * workers))))
    else:
        results = [_run_cell(c) for c in cells]
    by_candidate: dict[int, list] = {}
    for idx, res in zip(owners, results):
        by_candidate.setdefault(idx, []).append(res)
    for idx, res in by_candidate.items():
        report.rows.append(_summarize(candidates[idx], res, repeats))
    report.rows.sort(key=ReportRow.sort_key)
    return report
