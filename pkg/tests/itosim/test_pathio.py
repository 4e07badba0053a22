import os

import numpy as np
import pytest

from volrank.harness.ingest import ingest_csv
from volrank.itosim import load_npz, save_npz, scenario, simulate, write_csv
from volrank.models import ConfigError


def test_csv_written_for_ingest(tmp_path):
    path = simulate(scenario("constant_rank", d=2, r=1), 1.0, 0.01, seed=4)
    filename = write_csv(path, os.path.join(tmp_path, "path.csv"))

    with open(filename) as handle:
        lines = handle.read().splitlines()
    assert lines[0] == "t,x_1,x_2"
    assert len(lines) == 102

    ingested = ingest_csv(filename)
    assert np.array_equal(ingested.obs, path.obs)
    assert ingested.delta_n == pytest.approx(0.01)
    assert ingested.scenario == "ingested"


def test_npz_container(tmp_path):
    path = simulate(scenario("sde_case", d=2), 1.0, 0.02, refine=2, seed=1, keep_latent=True)
    npz, sidecar = save_npz(path, os.path.join(tmp_path, "sde"))
    assert os.path.exists(npz) and os.path.exists(sidecar)

    loaded = load_npz(npz)
    assert np.array_equal(loaded.obs, path.obs)
    assert loaded.seed == 1
    assert loaded.scenario == "sde_case"
    assert loaded.latent is not None
    assert np.array_equal(loaded.latent.v, path.latent.v)


def test_npz_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_npz(os.path.join(tmp_path, "missing"))
