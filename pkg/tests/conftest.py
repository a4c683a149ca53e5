import sys
from pathlib import Path

import pytest

sys.path.append(str(Path(__file__).parent.parent))

from core.data_models import BUILTIN_OPERATORS, DEFAULT_N_MAX, FAST_N_MAX
from moments.moment_engine import MomentEngine


@pytest.fixture(scope="session")
def engine():
    return MomentEngine()


@pytest.fixture(scope="session")
def fast_tables(engine):
    """Every built-in operator up to n = 23."""
    return {name: engine.build(spec, FAST_N_MAX) for name, spec in BUILTIN_OPERATORS.items()}


@pytest.fixture(scope="session")
def full_tables(engine):
    """Every built-in operator up to n = 65 (slow suites only)."""
    return {name: engine.build(spec, DEFAULT_N_MAX) for name, spec in BUILTIN_OPERATORS.items()}


def sig5(value) -> str:
    """Five significant figures in the form used by the reference tables."""
    return f"{float(value):.4e}"
