import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from boltseq import TAM_MU02, BenchModel, JointSpec, make_pattern  # noqa: E402


@pytest.fixture
def spec20():
    return JointSpec(n_bolts=20, target_load=200.0)


@pytest.fixture
def tetra02():
    return BenchModel.tetraparametric(TAM_MU02)


@pytest.fixture(params=["pattern1", "pattern2", "star_circular"])
def pattern20(request):
    return make_pattern(request.param, 20)
