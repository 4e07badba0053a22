"""Euler-Maruyama simulation of the coupled system (X, sigma, b)."""
import math

import numpy as np

from volrank.models import (
    DomainError,
    FloatArray,
    Latent,
    ModelSpec,
    PathSample,
    SimState,
    TooShortError,
)
from volrank.util import Stream, floor_ratio, get_logger, make_rng

_LOGGER = get_logger("itosim")


def simulate(
    model: ModelSpec,
    t_max: float,
    delta_n: float,
    refine: int = 8,
    seed: int = 0,
    keep_latent: bool = False,
) -> PathSample:
    """Simulate X on [0, T] and return it observed every ``delta_n``.

    The fine grid has step ``delta_n / refine``; one q-dimensional Brownian path
    drawn from the stream ``(seed, PATH)`` drives X, sigma and b.
    """
    if delta_n <= 0:
        raise DomainError(f"delta_n must be positive, got {delta_n}")
    if refine < 1:
        raise DomainError(f"refine must be at least 1, got {refine}")
    n_obs = floor_ratio(t_max, delta_n)
    if n_obs < 2 * model.d:
        raise TooShortError(
            f"T={t_max} holds {n_obs} increments of {delta_n}, "
            f"a block needs {2 * model.d}"
        )

    step = delta_n / refine
    rng = make_rng(seed, Stream.PATH)
    dw = rng.standard_normal((n_obs * refine, model.q)) * math.sqrt(step)

    if model.time_only:
        obs, latent = _simulate_time_only(model, dw, step, refine, delta_n, n_obs)
    else:
        obs, latent = _simulate_euler(model, dw, step, refine)

    _LOGGER.debug(
        f"Simulated {model.scenario}: d={model.d}, n={n_obs}, delta_n={delta_n}, seed={seed}"
    )
    return PathSample(
        delta_n=delta_n,
        t_max=t_max,
        obs=obs,
        seed=seed,
        scenario=model.scenario,
        latent=latent if keep_latent else None,
    )


def _simulate_time_only(
    model: ModelSpec,
    dw: FloatArray,
    step: float,
    refine: int,
    delta_n: float,
    n_obs: int,
) -> tuple[FloatArray, Latent]:
    assert model.sigma_fn is not None and model.drift_fn is not None
    times = np.arange(dw.shape[0]) * step
    sigma = np.asarray(model.sigma_fn(times, None)).reshape(-1, model.d, model.q)
    drift = np.asarray(model.drift_fn(times, None)).reshape(-1, model.d)
    dx = drift * step + np.einsum("kdq,kq->kd", sigma, dw)
    path = np.vstack((model.x0, model.x0 + np.cumsum(dx, axis=0)))
    obs_times = np.arange(n_obs + 1) * delta_n
    latent = Latent(
        sigma=np.asarray(model.sigma_fn(obs_times, None)).reshape(-1, model.d, model.q),
        b=np.asarray(model.drift_fn(obs_times, None)).reshape(-1, model.d),
        v=np.zeros((n_obs + 1, model.d, model.q, model.q)),
    )
    return path[::refine], latent


def _simulate_euler(
    model: ModelSpec, dw: FloatArray, step: float, refine: int
) -> tuple[FloatArray, Latent]:
    n_steps = dw.shape[0]
    n_rows = n_steps // refine + 1
    obs = np.empty((n_rows, model.d))
    sigmas = np.empty((n_rows, model.d, model.q))
    drifts = np.empty((n_rows, model.d))
    vols = np.empty((n_rows, model.d, model.q, model.q))

    state = model.initial_state
    for k in range(n_steps + 1):
        t = k * step
        sigma = state.sigma if model.sigma_fn is None else np.asarray(model.sigma_fn(t, state))
        drift = state.b if model.drift_fn is None else np.asarray(model.drift_fn(t, state))
        if k % refine == 0:
            row = k // refine
            obs[row] = state.x
            sigmas[row] = sigma
            drifts[row] = drift
            vols[row] = model.vol_of_vol_at(t, state)
        if k == n_steps:
            break
        state = _euler_step(model, t, state, sigma, drift, dw[k], step)

    return obs, Latent(sigma=sigmas, b=drifts, v=vols)


def _euler_step(
    model: ModelSpec,
    t: float,
    state: SimState,
    sigma: FloatArray,
    drift: FloatArray,
    dw: FloatArray,
    step: float,
) -> SimState:
    x = state.x + drift * step + sigma @ dw
    new_sigma = state.sigma
    if model.sigma_fn is None:
        new_sigma = state.sigma.copy()
        if model.sigma_drift is not None:
            new_sigma += np.asarray(model.sigma_drift(t, state)) * step
        if model.sigma_vol is not None:
            new_sigma += np.einsum("lmk,k->lm", model.sigma_vol(t, state), dw)
    new_b = state.b
    if model.drift_fn is None:
        new_b = state.b.copy()
        if model.drift_drift is not None:
            new_b += np.asarray(model.drift_drift(t, state)) * step
        if model.drift_vol is not None:
            new_b += np.asarray(model.drift_vol(t, state)) @ dw
    return SimState(x, new_sigma, new_b)
