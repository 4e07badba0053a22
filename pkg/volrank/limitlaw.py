"""Limit law module.

Monte Carlo realization of the Psi variables, of F_r and of the moments
Gamma_r, Gamma'_r, Gamma''_r. Draw ``i`` always uses the random stream
``(seed, PSI, i)``, so estimates are bit-identical for any worker count.
"""
import math
import threading
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from cachetools import LRUCache, cached
from cachetools.keys import hashkey
from scipy import stats

from volrank.detalg import gamma_r_many
from volrank.models import (
    DomainError,
    FloatArray,
    GammaEstimate,
    IntegratedLimits,
    LimitInput,
    ModelSpec,
    MonteCarloParams,
    PathSample,
    PsiDraw,
    UnsupportedModelError,
)
from volrank.util import Stream, get_logger, make_rng

_LOGGER = get_logger("limitlaw")

MIN_SUBSTEPS = 100
MIN_SAMPLES = 100
_CHUNK = 512

_GAMMA_CACHE: LRUCache = LRUCache(maxsize=512)
_CACHE_LOCK = threading.Lock()


def _ito_area(fine: FloatArray) -> FloatArray:
    """Forward Ito sums of int (W^k - W^k_start) dW^m over one interval, as [k, m]."""
    before = np.cumsum(fine, axis=0) - fine
    return before.T @ fine


def draw_psi(
    u: LimitInput, seed: int, n_substeps: int = 512, index: int = 0
) -> tuple[PsiDraw, PsiDraw]:
    """Simulate one coupled realization of Psi(u, 1) and Psi(u, 2).

    One path of (W, W') on [0, 2d] feeds both: kappa = 1 uses the unit intervals
    [i - 1, i], kappa = 2 the doubled intervals [2(i - 1), 2i]. When gamma vanishes
    the fine grid is not needed and only unit increments are drawn.
    """
    if n_substeps < MIN_SUBSTEPS:
        raise DomainError(f"n_substeps must be at least {MIN_SUBSTEPS}, got {n_substeps}")
    d, q = u.d, u.q
    rng = make_rng(seed, Stream.PSI, index)
    use_area = bool(np.any(u.gamma))

    if use_area:
        fine = rng.standard_normal((2 * d, n_substeps, q)) / math.sqrt(n_substeps)
        unit = fine.sum(axis=1)
        area1 = np.stack([_ito_area(fine[i]) for i in range(d)])
        area2 = np.stack(
            [_ito_area(np.concatenate((fine[2 * i], fine[2 * i + 1]))) for i in range(d)]
        )
    else:
        unit = rng.standard_normal((2 * d, q))
        area1 = area2 = np.zeros((d, q, q))
    unit_prime = rng.standard_normal((2 * d, d))

    paired = (unit[0::2] + unit[1::2]) / math.sqrt(2.0)
    paired_prime = (unit_prime[0::2] + unit_prime[1::2]) / math.sqrt(2.0)

    def _blocks(
        dw: FloatArray, dw_prime: FloatArray, area: FloatArray, kappa: int
    ) -> PsiDraw:
        x = dw @ u.alpha.T
        y = u.a + dw_prime @ u.beta.T + np.einsum("lmk,ikm->il", u.gamma, area) / kappa
        return PsiDraw(psi=np.concatenate((x, y), axis=1), kappa=kappa)

    return (
        _blocks(unit[:d], unit_prime[:d], area1, 1),
        _blocks(paired, paired_prime, area2, 2),
    )


def fbar_r_many(r: int, psi: FloatArray) -> FloatArray:
    """F_r over a stack of Psi blocks shaped (..., d, 2d)."""
    d = psi.shape[-2]
    x = np.swapaxes(psi[..., :d], -1, -2)
    y = np.swapaxes(psi[..., d:], -1, -2)
    return np.asarray(gamma_r_many(r, x, y)) ** 2


def fbar_r(r: int, draw: PsiDraw) -> float:
    """gamma_r of the x-matrix and the y-matrix of a draw, squared."""
    return float(fbar_r_many(r, draw.psi))


def _draw_range(
    u: LimitInput, seed: int, n_substeps: int, start: int, stop: int
) -> tuple[FloatArray, FloatArray]:
    draws = [draw_psi(u, seed, n_substeps, index) for index in range(start, stop)]
    return (
        np.stack([pair[0].psi for pair in draws]),
        np.stack([pair[1].psi for pair in draws]),
    )


def sample_fbar(
    u: LimitInput,
    r: int,
    n_samples: int,
    n_substeps: int = 512,
    seed: int = 0,
    workers: int = 1,
) -> tuple[FloatArray, FloatArray]:
    """F_r(u, 1) and F_r(u, 2) on ``n_samples`` coupled draws, in draw order."""
    if not 0 <= r <= u.d:
        raise DomainError(f"r must lie in 0..{u.d}, got {r}")
    starts = list(range(0, n_samples, _CHUNK))

    def _chunk(start: int) -> tuple[FloatArray, FloatArray]:
        psi1, psi2 = _draw_range(u, seed, n_substeps, start, min(start + _CHUNK, n_samples))
        return fbar_r_many(r, psi1), fbar_r_many(r, psi2)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(_chunk, starts))
    else:
        parts = [_chunk(start) for start in starts]
    return (
        np.concatenate([part[0] for part in parts]),
        np.concatenate([part[1] for part in parts]),
    )


def _se(values: FloatArray) -> float:
    return float(np.std(values, ddof=1) / math.sqrt(values.shape[0]))


def estimate_gamma(
    u: LimitInput,
    r: int,
    n_samples: int = 20000,
    n_substeps: int = 512,
    seed: int = 0,
    workers: int = 1,
) -> GammaEstimate:
    """Sample-mean estimates of Gamma_r, Gamma'_r and Gamma''_r at u.

    Standard errors of Gamma'_r and Gamma''_r come from the delta method, and
    ``se_gap`` is the standard error of Gamma'_r - Gamma''_r, in which the
    Gamma_r^2 terms cancel.
    """
    if n_samples < MIN_SAMPLES:
        raise DomainError(f"n_samples must be at least {MIN_SAMPLES}, got {n_samples}")
    f1, f2 = sample_fbar(u, r, n_samples, n_substeps, seed, workers)
    mean = float(np.mean(f1))
    gamma_prime = float(np.mean(f1 * f1)) - mean**2
    gamma_dprime = float(np.mean(f1 * f2)) - mean**2
    estimate = GammaEstimate(
        r=r,
        gamma_r=mean,
        gamma_r_prime=gamma_prime,
        gamma_r_dprime=gamma_dprime,
        se_gamma_r=_se(f1),
        se_gamma_r_prime=_se(f1 * f1 - 2 * mean * f1),
        se_gamma_r_dprime=_se(f1 * f2 - 2 * mean * f1),
        se_gap=_se(f1 * f1 - f1 * f2),
        n_samples=n_samples,
        n_substeps=n_substeps,
        seed=seed,
    )
    _LOGGER.debug(f"Gamma estimate at d={u.d}, q={u.q}: {estimate}")
    return estimate


def law_equality_ks(
    u: LimitInput,
    r: int,
    n_samples: int = 10000,
    n_substeps: int = 512,
    seed: int = 0,
    workers: int = 1,
) -> tuple[float, float]:
    """Two-sample KS statistic and p-value between F_r(u, 1) and F_r(u, 2)."""
    f1, f2 = sample_fbar(u, r, n_samples, n_substeps, seed, workers)
    result = stats.ks_2samp(f1, f2)
    return float(result.statistic), float(result.pvalue)


def ks_critical_two_sample(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic critical value of the two-sample KS statistic."""
    c_alpha = math.sqrt(-0.5 * math.log(alpha / 2))
    return c_alpha * math.sqrt((n + m) / (n * m))


def _key(values: FloatArray) -> tuple[float, ...]:
    return tuple(float(x) for x in np.round(np.ravel(values), 12))


@cached(
    cache=_GAMMA_CACHE,
    key=lambda r, alpha, beta, gamma, a, shape, mc: hashkey(
        r, alpha, beta, gamma, a, shape, mc.n_samples, mc.n_substeps, mc.seed
    ),
    lock=_CACHE_LOCK,
)
def _pointwise_gamma(
    r: int,
    alpha: tuple[float, ...],
    beta: tuple[float, ...],
    gamma: tuple[float, ...],
    a: tuple[float, ...],
    shape: tuple[int, int],
    mc: MonteCarloParams,
) -> GammaEstimate:
    d, q = shape
    u = LimitInput(
        alpha=np.reshape(alpha, (d, q)),
        beta=np.reshape(beta, (d, d)),
        gamma=np.reshape(gamma, (d, q, q)),
        a=np.asarray(a),
    )
    if not np.any(u.alpha) and r > 0:
        # rank(alpha) < r makes every draw vanish
        return GammaEstimate(r, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, mc.n_substeps, mc.seed)
    return estimate_gamma(u, r, mc.n_samples, mc.n_substeps, mc.seed, mc.workers)


def clear_cache() -> None:
    with _CACHE_LOCK:
        _GAMMA_CACHE.clear()


def _coefficients(
    model: ModelSpec, times: FloatArray, path: PathSample | None
) -> tuple[FloatArray, FloatArray, FloatArray]:
    d, q = model.d, model.q
    if path is not None and path.latent is not None:
        rows = np.minimum(
            (times / path.delta_n).astype(int), path.latent.sigma.shape[0] - 1
        )
        return path.latent.sigma[rows], path.latent.v[rows], path.latent.b[rows]
    if model.time_only and model.sigma_fn is not None and model.drift_fn is not None:
        sigma = np.asarray(model.sigma_fn(times, None)).reshape(-1, d, q)
        drift = np.asarray(model.drift_fn(times, None)).reshape(-1, d)
        return sigma, np.zeros((times.shape[0], d, q, q)), drift
    raise UnsupportedModelError(
        f"scenario {model.scenario!r} has stochastic coefficients; "
        "pass a path simulated with latent values"
    )


def integrated_limits(
    model: ModelSpec,
    r: int,
    grid: int = 64,
    mc: MonteCarloParams | None = None,
    theta: Sequence[Sequence[float]] | FloatArray | None = None,
    p: float = 1.0,
    t_max: float = 1.0,
    path: PathSample | None = None,
) -> IntegratedLimits:
    """Midpoint Riemann sums over [0, T] of the Gamma quantities along the model.

    Returns S(r)_T, V(r)^{kk'}_T, the integrals 2d int Theta^{r,k,k'}, the
    asymptotic variance V(T) of the rank estimator and the variance of the
    constant-rank statistic B.
    """
    if grid < 1:
        raise DomainError(f"grid must be positive, got {grid}")
    if not 0 <= r <= model.d:
        raise DomainError(f"r must lie in 0..{model.d}, got {r}")
    mc = mc or MonteCarloParams()
    d = model.d
    theta_arr = np.eye(d) if theta is None else np.asarray(theta, dtype=float)
    times = (np.arange(grid) + 0.5) * (t_max / grid)
    sigma, vol, drift = _coefficients(model, times, path)

    estimates = [
        _pointwise_gamma(
            r,
            _key(sigma[j]),
            _key(theta_arr),
            _key(vol[j]),
            _key(drift[j]),
            (model.d, model.q),
            mc,
        )
        for j in range(grid)
    ]
    step = t_max / grid
    g = np.array([e.gamma_r for e in estimates])
    g1 = np.array([e.gamma_r_prime for e in estimates])
    g2 = np.array([e.gamma_r_dprime for e in estimates])

    s_r = float(np.sum(g) * step)
    v11 = 2 * d * float(np.sum(g1) * step)
    v12 = 2 * d * float(np.sum(g2) * step)
    theta11 = 2 * d * float(np.sum(g1 + g**2) * step)
    theta12 = 2 * d * float(np.sum(g2 + g**2) * step)
    log2 = math.log(2.0)
    v_total = (2 * v11 - 2 * v12) / (s_r * log2) ** 2 if s_r > 0 else 0.0

    bar_v = 0.0
    if s_r > 0:
        positive = g > 0
        weight = np.zeros_like(g)
        weight[positive] = (1.0 / g[positive] - t_max / s_r) ** 2
        increments = 2 * d * (2 * g1 - 2 * g2) * step
        bar_v = (p * abs(r) ** (p - 1) / log2) ** 2 * float(np.sum(weight * increments))

    limits = IntegratedLimits(
        r=r,
        t_max=t_max,
        s_r=s_r,
        v11=v11,
        v22=v11,
        v12=v12,
        theta11=theta11,
        theta22=theta11,
        theta12=theta12,
        v_total=v_total,
        bar_v=bar_v,
        p=p,
    )
    _LOGGER.info(f"Integrated limits for {model.scenario}, r={r}: {limits}")
    return limits
