from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from sparse_ucc.fcidump import IntegralStore, read_fcidump

DATA = Path(__file__).parent / "data"


def random_store(n_orbitals: int, n_electrons: int, seed: int, ms2: int | None = None) -> IntegralStore:
    """Random integrals with the full 8-fold permutational symmetry."""
    rng = np.random.default_rng(seed)
    m = n_orbitals
    h = rng.normal(size=(m, m))
    h = 0.5 * (h + h.T) - 2.0 * np.diag(np.arange(m, 0, -1))
    eri = {}
    for p in range(1, m + 1):
        for q in range(1, p + 1):
            for r in range(1, m + 1):
                for s in range(1, r + 1):
                    if (p, q) >= (r, s):
                        eri[(p, q, r, s)] = float(rng.normal(scale=0.3))
    if ms2 is None:
        ms2 = n_electrons % 2
    return IntegralStore(m, n_electrons, ms2, float(rng.normal()), h, eri)


@pytest.fixture(scope="session")
def manifest() -> dict:
    return json.loads((DATA / "manifest.json").read_text())


@pytest.fixture(scope="session")
def molecule():
    cache: dict[str, IntegralStore] = {}

    def load(name: str) -> IntegralStore:
        if name not in cache:
            cache[name] = read_fcidump(DATA / f"{name}.fcidump")
        return cache[name]

    return load


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
