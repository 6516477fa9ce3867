import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

DATA = TESTS / "data"
FAKES = TESTS / "fake_solvers"


@pytest.fixture
def sample_proof_path():
    return DATA / "sample_proof.txt"


@pytest.fixture
def sample_dag(sample_proof_path):
    from proofgate.dag import build_dag
    from proofgate.tptp import read_derivation

    return build_dag(read_derivation(sample_proof_path))
