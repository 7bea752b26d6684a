import pytest

from satqkd.config import default_source
from satqkd.protocol import SecurityParams
from satqkd.receiver import DetectorModel
from satqkd.source import ExtinctionSet, intrinsic_qber

# extinction ratios measured on the 785 nm module (H, V, D, A)
MEASURED_EXTINCTION = ExtinctionSet(er_h=0.61e-3, er_v=0.35e-3, er_d=1.3e-2, er_a=1.8e-2)


@pytest.fixture
def source():
    return default_source()


@pytest.fixture
def detector():
    return DetectorModel()


@pytest.fixture
def security():
    return SecurityParams()


@pytest.fixture
def e_det():
    return intrinsic_qber(MEASURED_EXTINCTION)
