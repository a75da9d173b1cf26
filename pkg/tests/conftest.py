import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from piggyback.network import PowerProfile, SnrConfig, Topology  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def unit():
    return Topology.uniform(1.0)


@pytest.fixture
def snr1():
    return SnrConfig(1.0)


@pytest.fixture
def mixed_powers():
    return PowerProfile(100.0, 0.01, 1.0, 1.0)


@pytest.fixture
def configs_dir():
    return ROOT / "configs"
