from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sigmak.delaunay import OdeParams, orbit  # noqa: E402

TRIPLES = [(5, 1, -0.1), (5, 2, -0.05), (7, 3, -0.02)]

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def orbits():
    """One integrated orbit per standard triple, t in [-1, 30]."""
    out = {}
    for n, k, h in TRIPLES:
        out[(n, k, h)] = orbit(h, OdeParams(n, k), 30.0, 1e-12, t_start=-1.0)
    return out


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
