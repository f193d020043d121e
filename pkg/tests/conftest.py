import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pbcert.core import VariableRegistry  # noqa: E402
from pbcert.proofio import parse_opb  # noqa: E402

from oracles import FIXTURES  # noqa: E402


@pytest.fixture
def worked_formula():
    return parse_opb((FIXTURES / "worked_example.opb").read_text())


@pytest.fixture
def worked_proof_text():
    return (FIXTURES / "worked_example.pbp").read_text()


@pytest.fixture
def registry():
    reg = VariableRegistry()
    for name in ("x1", "x2", "x3", "x4", "y", "z", "w"):
        reg.add(name)
    return reg
