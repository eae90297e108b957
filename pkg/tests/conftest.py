from importlib import resources

import numpy as np
import pytest

from twostage import DesignConfig, TwoStageDataset, _backend

DATA = resources.files("twostage") / "data"
RATS_STAGE1 = str(DATA / "rats_stage1.csv")
RATS_STAGE2 = str(DATA / "rats_stage2.csv")


@pytest.fixture
def hand_cfg():
    return DesignConfig(2, 2)


@pytest.fixture
def hand_data():
    return TwoStageDataset((1.0, 3.0), (0.0, 2.0), (2.0, 4.0), 1)


@pytest.fixture
def rats():
    from twostage.io import load_dataset

    return load_dataset(RATS_STAGE1, RATS_STAGE2)


@pytest.fixture(params=_backend.available())
def kernel(request):
    return _backend.get_kernel(request.param)


def random_dataset(rng, cfg, mu1=0.0, mu2=0.0, sigma=1.0):
    arm1 = rng.normal(mu1, sigma, cfg.n1)
    arm2 = rng.normal(mu2, sigma, cfg.n1)
    q = 1 if arm1.mean() > arm2.mean() else 2
    stage2 = rng.normal(mu1 if q == 1 else mu2, sigma, cfg.n2)
    return TwoStageDataset(arm1, arm2, stage2, q)
