import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, derandomize=True)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
SYSTEMS = ROOT / "systems"


@pytest.fixture(scope="session")
def oracle():
    """Frozen values produced by tests/oracles/generate.py (sympy and scipy)."""
    return json.loads((Path(__file__).with_name("oracles") / "oracle_values.json").read_text())


def fractions(values):
    return [Fraction(v) for v in values]
