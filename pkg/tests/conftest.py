from pathlib import Path

import numpy as np
import pytest

import vaxdyn.params as vparams

ROOT = Path(__file__).resolve().parent.parent
SNAPSHOT_DIR = ROOT / "data" / "snapshot"


@pytest.fixture
def fitted():
    return vparams.fitted_params()


@pytest.fixture
def initial_estimates():
    return vparams.initial_estimates()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def snapshot_dir():
    if not SNAPSHOT_DIR.exists():
        pytest.skip("bundled data snapshot missing")
    return SNAPSHOT_DIR
