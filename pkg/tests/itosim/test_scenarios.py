import numpy as np
import pytest

from volrank.detalg import rank
from volrank.itosim import SCENARIOS, scenario, validate_rank_profile
from volrank.models import ConfigError


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_builtin_scenarios_validate(name: str):
    model = scenario(name)
    validate_rank_profile(model, 1.0)
    assert model.scenario == name


def test_constant_rank():
    model = scenario("constant_rank", d=3, r=2, scale=2.0)
    assert rank(model.sigma_at(0.3)) == 2
    assert model.sigma_at(0.3)[0, 0] == 2.0
    assert model.rank_profile.max_rank(1.0) == 2


def test_rank_switch_default_time():
    model = scenario("rank_switch", t_max=2.0)
    assert model.params["switch_time"] == 1.0
    assert rank(model.sigma_at(0.5)) == 1
    assert rank(model.sigma_at(1.5)) == 2
    assert model.rank_profile.max_rank(2.0) == 2


def test_rank_switch_limit():
    model = scenario("rank_switch", d=2, r_before=1, r_after=2)
    # integral of r_s minus T R_T for a switch from 1 to 2 at T / 2
    assert model.rank_profile.const_rank_limit(1.0, 1.0) == pytest.approx(-0.5, abs=1e-5)


def test_rank_switch_decreasing():
    model = scenario("rank_switch", d=3, r_before=3, r_after=1, switch_time=0.4)
    assert rank(model.sigma_at(0.2)) == 3
    assert rank(model.sigma_at(0.6)) == 1
    assert model.rank_profile.max_rank(1.0) == 3


def test_integrated_diffusion_has_rank_zero():
    model = scenario("integrated_diffusion", d=2)
    assert not np.any(model.sigma_at(0.5))
    assert model.rank_profile.max_rank(1.0) == 0


def test_sde_case_vol_of_vol():
    model = scenario("sde_case", d=2, r=1)
    v = model.vol_of_vol_at(0.0)
    assert v.shape == (2, 2, 2)
    assert v[0, 0, 0] == pytest.approx(1.5)  # c cos(0) sigma^{11}
    assert not np.any(v[1])


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        scenario("heston")


def test_bad_parameters():
    with pytest.raises(ConfigError):
        scenario("constant_rank", d=2, r=3)
    with pytest.raises(ConfigError):
        scenario("constant_rank", rank=1)
    with pytest.raises(ConfigError):
        scenario("rank_switch", width=0.0)


def test_rank_switch_ramp_width():
    assert scenario("rank_switch").params["width"] == 1e-6
    assert scenario("rank_switch", fine_step=1e-5).params["width"] == 1e-5
    assert scenario("rank_switch", fine_step=1e-5, width=0.01).params["width"] == 0.01
    assert "width" not in scenario("constant_rank", fine_step=1e-5).params
