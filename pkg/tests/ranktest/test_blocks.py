import math

import numpy as np
import pytest

from volrank.itosim import scenario, simulate
from volrank.models import DomainError, PathSample, PerturbationConfig, TooShortError
from volrank.ranktest import perturb_and_block, s_statistics, variance_estimators
from volrank.ranktest.blocks import blocks_up_to, cumulative_s, simulate_wprime
from volrank.ranktest.maxrank import rank_estimate
from tests import brownian_path, constant_blocks


def zero_path(d: int, n: int, t_max: float = 1.0) -> PathSample:
    return PathSample(delta_n=t_max / n, t_max=t_max, obs=np.zeros((n + 1, d)))


def test_block_count():
    blocks = perturb_and_block(zero_path(2, 100), PerturbationConfig())
    assert blocks.n_blocks == 25
    assert blocks.block_span == pytest.approx(0.04)


def test_too_short():
    with pytest.raises(TooShortError):
        perturb_and_block(zero_path(2, 3, 0.03), PerturbationConfig())


def test_wprime_seed():
    first = simulate_wprime(10, 2, 0.01, 3)
    assert first.shape == (10, 2)
    assert np.array_equal(first, simulate_wprime(10, 2, 0.01, 3))
    assert not np.array_equal(first, simulate_wprime(10, 2, 0.01, 4))


def test_zero_path_perturbation_only():
    # f1 is then det(dW')^2 with dW' ~ N(0, delta_n I), whose mean is d! delta_n^d;
    # the kappa = 2 increments have twice the variance
    delta_n = 1e-4
    blocks = perturb_and_block(zero_path(2, 10000), PerturbationConfig(seed_wprime=1))
    assert blocks.n_blocks == 2500
    assert float(np.mean(blocks.f1)) / delta_n**2 == pytest.approx(2.0, abs=0.4)
    assert float(np.mean(blocks.f2)) / delta_n**2 == pytest.approx(8.0, abs=1.6)


def test_brownian_mean_f1():
    # d = 1: E f1 = (delta_n + delta_n^2) / delta_n
    path = simulate(scenario("constant_rank", d=1, r=1), 20.0, 0.01, seed=2)
    blocks = perturb_and_block(path, PerturbationConfig(seed_wprime=2))
    assert blocks.n_blocks == 1000
    assert float(np.mean(blocks.f1)) == pytest.approx(1.01, abs=0.2)


def test_theta_scales_perturbation():
    path = zero_path(1, 1000)
    plain = perturb_and_block(path, PerturbationConfig(seed_wprime=5))
    scaled = perturb_and_block(path, PerturbationConfig(theta=[[3.0]], seed_wprime=5))
    assert np.allclose(scaled.f1, 9.0 * plain.f1)
    assert np.allclose(scaled.f2, 9.0 * plain.f2)


def test_s_statistics_single_block():
    blocks = constant_blocks(2, 1, 0.01, f1=3.0, f2=1.0)
    s1, s2 = s_statistics(blocks)
    assert s1 == pytest.approx(0.12)
    assert s2 == pytest.approx(0.04)
    assert s_statistics(blocks, 0.04) == (s1, s2)


def test_s_statistics_up_to():
    blocks = constant_blocks(1, 10, 0.05, f1=np.arange(10.0))
    # blocks of length 0.1; [0, 0.35] holds the first three
    assert s_statistics(blocks, 0.35)[0] == pytest.approx(0.1 * 3.0)
    with pytest.raises(DomainError):
        blocks_up_to(blocks, 0.0)
    with pytest.raises(DomainError):
        blocks_up_to(blocks, 2.0)


def test_variance_estimators():
    blocks = constant_blocks(1, 2, 0.1, f1=[1.0, 2.0], f2=[2.0, 1.0])
    v11, v22, v12 = variance_estimators(blocks)
    assert v11 == pytest.approx(2.0)
    assert v22 == pytest.approx(2.0)
    assert v12 == pytest.approx(1.6)
    assert v12**2 <= v11 * v22
    with pytest.raises(DomainError):
        variance_estimators(blocks, 0.1)


def test_cumulative_s():
    blocks = constant_blocks(1, 4, 0.25, f1=[1.0, 2.0, 3.0, 4.0])
    cs1, cs2 = cumulative_s(blocks)
    assert np.allclose(cs1, [0.0, 0.5, 1.5, 3.0, 5.0])
    assert cs2[-1] == pytest.approx(2.0)
    assert math.isclose(cs1[-1], s_statistics(blocks)[0])


THETA = np.array([[1.0, 0.3], [0.0, 0.8]])


def _transformed(path: PathSample, matrix: np.ndarray) -> PathSample:
    return PathSample(delta_n=path.delta_n, t_max=path.t_max, obs=path.obs @ matrix.T)


def _r_hat(blocks) -> float:
    return rank_estimate(*s_statistics(blocks), blocks.d)


def test_orthogonal_equivariance():
    path = brownian_path(2, 4000, seed=3)
    angle = 0.7
    q = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    base = perturb_and_block(path, PerturbationConfig(theta=THETA, seed_wprime=4))
    rotated = perturb_and_block(
        _transformed(path, q), PerturbationConfig(theta=q @ THETA, seed_wprime=4)
    )
    assert np.allclose(rotated.f1, base.f1, rtol=1e-9, atol=1e-12)
    assert np.allclose(rotated.f2, base.f2, rtol=1e-9, atol=1e-12)
    assert _r_hat(rotated) == pytest.approx(_r_hat(base), abs=1e-9)


def test_joint_scaling():
    path = brownian_path(2, 4000, seed=3)
    c = 2.5
    base = perturb_and_block(path, PerturbationConfig(theta=THETA, seed_wprime=4))
    scaled = perturb_and_block(
        _transformed(path, c * np.eye(2)), PerturbationConfig(theta=c * THETA, seed_wprime=4)
    )
    assert np.allclose(scaled.f1, c**4 * base.f1, rtol=1e-9, atol=0.0)
    assert np.allclose(scaled.f2, c**4 * base.f2, rtol=1e-9, atol=0.0)
    assert _r_hat(scaled) == pytest.approx(_r_hat(base), abs=1e-9)


def test_wprime_seed_changes_f():
    path = brownian_path(2, 4000, seed=3)
    first = perturb_and_block(path, PerturbationConfig(theta=THETA, seed_wprime=4))
    second = perturb_and_block(path, PerturbationConfig(theta=THETA, seed_wprime=5))
    assert not np.allclose(first.f1, second.f1)
    assert not np.allclose(first.f2, second.f2)
