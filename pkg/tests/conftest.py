import os

import pytest

from volrank.models import StudyConfig
from tests import DB_FILE


def remove_existing_db():
    if os.path.exists(DB_FILE):
        os.remove(DB_FILE)  # Remove existing db


@pytest.fixture
def study_db():
    remove_existing_db()
    yield DB_FILE
    remove_existing_db()


@pytest.fixture
def small_study():
    return StudyConfig(
        scenario="constant_rank",
        model_params={"d": 2, "r": 1},
        n_obs=2000,
        hypotheses=("=1", "<=0"),
        alphas=(0.05, 0.1),
        k_n=10,
        n_paths=6,
        master_seed=7,
        refine=2,
    )
