"""Perturbation of the observations and the block statistics."""
import math

import numpy as np

from volrank.detalg import test_function_f
from volrank.models import (
    DomainError,
    FloatArray,
    PathSample,
    PerturbationConfig,
    PerturbedBlocks,
    TooShortError,
)
from volrank.util import Stream, floor_ratio, get_logger, make_rng

_LOGGER = get_logger("ranktest")


def simulate_wprime(
    n_increments: int, d: int, delta_n: float, seed_wprime: int
) -> FloatArray:
    """Increments of the d-dimensional Brownian motion W' on the observation grid."""
    rng = make_rng(seed_wprime, Stream.WPRIME)
    return rng.standard_normal((n_increments, d)) * math.sqrt(delta_n)


def perturb_and_block(path: PathSample, cfg: PerturbationConfig) -> PerturbedBlocks:
    """Add sqrt(kappa delta_n) theta W' to X and compute f on every block.

    Block i covers the increments 2id..2id+2d-1. f1 uses its first d one-step
    increments of Z^{n,1} over sqrt(delta_n), f2 the d two-step increments of
    Z^{n,2} over sqrt(2 delta_n).
    """
    d = path.d
    n_blocks = path.n_increments // (2 * d)
    if n_blocks < 1:
        raise TooShortError(
            f"path has {path.obs.shape[0]} observations, a block needs {2 * d + 1}"
        )
    theta = cfg.theta_for(d)
    used = n_blocks * 2 * d
    dx = path.increments()[:used]
    dx_prime = simulate_wprime(path.n_increments, d, path.delta_n, cfg.seed_wprime)
    dx_prime = dx_prime[:used] @ theta.T

    root = math.sqrt(path.delta_n)
    dz1 = (dx + root * dx_prime).reshape(n_blocks, 2 * d, d)
    dz2 = (dx + math.sqrt(2.0) * root * dx_prime).reshape(n_blocks, d, 2, d)

    f1 = np.asarray(test_function_f(dz1[:, :d, :] / root))
    f2 = np.asarray(test_function_f(dz2.sum(axis=2) / (math.sqrt(2.0) * root)))
    _LOGGER.debug(f"Computed {n_blocks} blocks for d={d}, delta_n={path.delta_n}")
    return PerturbedBlocks(f1=f1, f2=f2, delta_n=path.delta_n, d=d, t_max=path.t_max)


def blocks_up_to(blocks: PerturbedBlocks, t: float | None) -> int:
    """Number of complete blocks in [0, t]."""
    if t is None:
        return blocks.n_blocks
    if t <= 0 or t > blocks.t_max * (1 + 1e-12):
        raise DomainError(f"time must lie in (0, {blocks.t_max}], got {t}")
    return min(floor_ratio(t, blocks.block_span), blocks.n_blocks)


def s_statistics(blocks: PerturbedBlocks, up_to: float | None = None) -> tuple[float, float]:
    """S^{n,1}_t and S^{n,2}_t, with t = T by default."""
    k = blocks_up_to(blocks, up_to)
    span = blocks.block_span
    return span * math.fsum(blocks.f1[:k]), span * math.fsum(blocks.f2[:k])


def variance_estimators(
    blocks: PerturbedBlocks, t: float | None = None
) -> tuple[float, float, float]:
    """V^{n,11}_t, V^{n,22}_t and V^{n,12}_t."""
    if t is not None and t < blocks.block_span * (1 - 1e-12):
        raise DomainError(f"t must cover one block of length {blocks.block_span}, got {t}")
    k = blocks_up_to(blocks, t)
    f1, f2 = blocks.f1[:k], blocks.f2[:k]
    scale = 4 * blocks.d**2 * blocks.delta_n
    return (
        scale * math.fsum(f1 * f1),
        scale * math.fsum(f2 * f2),
        scale * math.fsum(f1 * f2),
    )


def cumulative_s(blocks: PerturbedBlocks) -> tuple[FloatArray, FloatArray]:
    """S^{n,k} at the block boundaries 0, 2d delta_n, 4d delta_n, ..."""
    span = blocks.block_span
    zero = np.zeros(1)
    return (
        span * np.concatenate((zero, np.cumsum(blocks.f1))),
        span * np.concatenate((zero, np.cumsum(blocks.f2))),
    )
