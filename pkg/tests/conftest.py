from __future__ import annotations

from pathlib import Path

import pytest

from conformalcalc.algebras import current_sl2, fock, lattice, r_minus_one
from conformalcalc.engine import Engine

SPECS_DIR = Path(__file__).resolve().parents[1] / "specs"


@pytest.fixture(scope="session")
def specs_dir() -> Path:
    return SPECS_DIR


@pytest.fixture(scope="session")
def r1_engine() -> Engine:
    return Engine(r_minus_one(1))


@pytest.fixture(scope="session")
def r2_engine() -> Engine:
    return Engine(r_minus_one(2))


@pytest.fixture(scope="session")
def r3_engine() -> Engine:
    return Engine(r_minus_one(3))


@pytest.fixture(scope="session")
def fock_engine() -> Engine:
    return Engine(fock())


@pytest.fixture(scope="session")
def sl2_engine() -> Engine:
    return Engine(current_sl2(3))


@pytest.fixture(scope="session")
def lattice2_engine() -> Engine:
    return Engine(lattice(2))
