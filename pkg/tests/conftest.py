from pathlib import Path

import pytest

from skolemsynth.formula import parse_qdimacs

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def example1():
    return parse_qdimacs((FIXTURES / "example1.qdimacs").read_text())


@pytest.fixture
def fixtures_dir():
    return FIXTURES
