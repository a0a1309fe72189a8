import numpy as np
import pytest

from btdcorcondia.ll1 import BlockStructure, Ll1Model


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_model(rng, dims, ranks) -> Ll1Model:
    s = BlockStructure(tuple(ranks))
    I, J, K = dims
    return Ll1Model(
        rng.standard_normal((I, s.total())),
        rng.standard_normal((J, s.total())),
        rng.standard_normal((K, s.R)),
        s,
    )


def rel_diff(x, y) -> float:
    return float(np.linalg.norm(np.ravel(x) - np.ravel(y)) / max(np.linalg.norm(np.ravel(y)), 1e-300))


_verdicts: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance check; printed in the terminal summary."""
    def record(label: str, ok: bool, detail: str) -> bool:
        _verdicts.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance")
        for line in _verdicts:
            terminalreporter.write_line(line)
