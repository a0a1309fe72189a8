import itertools
from dataclasses import replace
from math import comb

import numpy as np
import pytest

from btdcorcondia.datagen import SimSpec, generate
from btdcorcondia.diagnostics import btd_corcondia
from btdcorcondia.ll1 import BlockStructure, FitOptions, fit_ll1
from btdcorcondia.search import (
    ReportRow,
    SearchSpace,
    cell_seed,
    enumerate_structures,
    grid_search,
)

from test_diagnostics import classic_corcondia


def brute_force_multisets(max_R, max_L):
    found = set()
    for R in range(1, max_R + 1):
        for combo in itertools.product(range(1, max_L + 1), repeat=R):
            found.add(tuple(sorted(combo)))
    return found


def test_enumerate_small_cases():
    assert [s.block_ranks for s in enumerate_structures(SearchSpace(1, 3))] == [(1,), (2,), (3,)]
    got = [s.block_ranks for s in enumerate_structures(SearchSpace(2, 2))]
    assert got == [(1,), (2,), (1, 1), (1, 2), (2, 2)]
    assert set(got) == brute_force_multisets(2, 2)


def test_enumerate_count_923():
    structures = enumerate_structures(SearchSpace(6, 6))
    stars_and_bars = sum(comb(R + 5, R) for R in range(1, 7))
    assert stars_and_bars == 923
    assert len(structures) == 923
    assert {s.block_ranks for s in structures} == brute_force_multisets(6, 6)
    keys = [(s.R, s.block_ranks) for s in structures]
    assert keys == sorted(keys)


@pytest.mark.parametrize("max_R,max_L", [(3, 1), (2, 4), (4, 3)])
def test_enumerate_includes_cpd(max_R, max_L):
    structures = enumerate_structures(SearchSpace(max_R, max_L))
    for R in range(1, max_R + 1):
        assert BlockStructure((1,) * R) in structures


def test_search_space_validation():
    with pytest.raises(ValueError):
        SearchSpace(0, 2)


def test_ranking_rule():
    rows = [
        ReportRow(BlockStructure((1,)), 100.0, 0.0, 0.1, 1, 0),
        ReportRow(BlockStructure((2, 2)), 99.999, 0.0, 0.0, 1, 0),
        ReportRow(BlockStructure((4,)), 100.0, 0.0, 0.1, 1, 0),
        ReportRow(BlockStructure((1, 3)), 100.0, 0.0, 0.1, 1, 0),
        ReportRow(BlockStructure((3, 3)), None, None, None, 1, 1),
        ReportRow(BlockStructure((1, 2)), 97.0, 0.0, 0.1, 1, 0),
    ]
    ordered = [str(r.structure) for r in sorted(rows, key=ReportRow.sort_key)]
    assert ordered == ["[1,3]", "[2,2]", "[4]", "[1]", "[1,2]", "[3,3]"]


@pytest.fixture(scope="module")
def small_tensor():
    t, _ = generate(SimSpec((12, 13, 14), BlockStructure((1, 2)), seed=5))
    return t


def test_grid_search_finds_true_structure(small_tensor):
    report = grid_search(small_tensor, SearchSpace(2, 3), repeats=2, seed=1)
    assert report.rows[0].structure == BlockStructure((1, 2))
    assert report.rows[0].mean_pct >= 99.9
    assert len(report.rows) == len(enumerate_structures(SearchSpace(2, 3)))
    assert all(r.repeats == 2 for r in report.rows)


def test_grid_search_deterministic_and_parallel_equal(small_tensor):
    space = SearchSpace(2, 2)
    a = grid_search(small_tensor, space, repeats=2, seed=3)
    b = grid_search(small_tensor, space, repeats=2, seed=3)
    c = grid_search(small_tensor, space, repeats=2, seed=3, threads=2)
    assert a.rows == b.rows == c.rows


def test_grid_search_skips_oversized(rng):
    t = rng.standard_normal((2, 2, 3))
    report = grid_search(t, SearchSpace(2, 3), repeats=1, seed=0,
                         fit_opts=FitOptions(restarts=1, init="random", max_iter=50))
    skipped = {str(s) for s, _ in report.skipped}
    assert skipped == {"[2,3]", "[3,3]"}
    assert all("I*J" in why for _, why in report.skipped)
    assert len(report.rows) == len(enumerate_structures(SearchSpace(2, 3))) - 2


def test_failures_excluded_and_ranked_last(rng):
    t = rng.standard_normal((6, 7, 8))
    opts = FitOptions(restarts=1, max_iter=1, tol=0.0)
    report = grid_search(t, SearchSpace(1, 2), repeats=2, seed=0, fit_opts=opts)
    for row in report.rows:
        assert row.failures == 2 and row.mean_pct is None


def test_repeats_must_be_positive(small_tensor):
    with pytest.raises(ValueError):
        grid_search(small_tensor, SearchSpace(1, 1), repeats=0)


def test_all_ones_scores_match_classic_corcondia(rng):
    t, _ = generate(SimSpec((8, 9, 10), BlockStructure((1, 1, 1)), seed=2, snr_db=20.0))
    space = SearchSpace(3, 1)
    opts = FitOptions(restarts=1)
    report = grid_search(t, space, repeats=2, seed=9, fit_opts=opts)
    for idx, s in enumerate(enumerate_structures(space)):
        row = report.row_for(s)
        for rep, score in enumerate(row.scores):
            m = fit_ll1(t, s, replace(opts, seed=cell_seed(9, idx, rep)))
            ref, _ = classic_corcondia(t, m.A, m.B, m.C)
            assert abs(score - ref) < 1e-8
