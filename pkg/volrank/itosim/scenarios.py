"""Built-in scenarios with a known rank process."""
from collections.abc import Callable, Mapping
from typing import Any

import numpy as np

from volrank.detalg import rank
from volrank.models import ConfigError, FloatArray, ModelSpec, RankProfile, SimState
from volrank.util import get_logger

_LOGGER = get_logger("itosim")

N_CHECK_TIMES = 100


def _check_dims(d: int, q: int, *ranks: int) -> None:
    if d < 1 or q < 1:
        raise ConfigError(f"dimensions must be positive, got d={d}, q={q}")
    for r in ranks:
        if not 0 <= r <= min(d, q):
            raise ConfigError(f"rank {r} is infeasible for d={d}, q={q}")


def _diag(d: int, q: int, values: FloatArray) -> FloatArray:
    out = np.zeros(values.shape[:-1] + (d, q))
    k = min(d, q)
    idx = np.arange(k)
    out[..., idx, idx] = values[..., :k]
    return out


def constant_rank(
    d: int = 2, q: int | None = None, r: int = 1, scale: float = 1.0
) -> ModelSpec:
    """sigma = scale * diag(1, .., 1, 0, .., 0) with r ones, no drift."""
    q = d if q is None else q
    _check_dims(d, q, r)
    sigma = _diag(d, q, scale * (np.arange(min(d, q)) < r).astype(float))

    def sigma_fn(t: Any, state: SimState | None) -> FloatArray:
        return np.broadcast_to(sigma, np.shape(t) + sigma.shape).copy()

    def drift_fn(t: Any, state: SimState | None) -> FloatArray:
        return np.zeros(np.shape(t) + (d,))

    return ModelSpec(
        d=d,
        q=q,
        x0=np.zeros(d),
        sigma0=sigma,
        b0=np.zeros(d),
        rank_profile=RankProfile((r,)),
        scenario="constant_rank",
        params={"d": d, "q": q, "r": r, "scale": scale},
        sigma_fn=sigma_fn,
        drift_fn=drift_fn,
        time_only=True,
    )


def _smoothstep(x: Any) -> Any:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def rank_switch(
    d: int = 2,
    q: int | None = None,
    r_before: int = 1,
    r_after: int = 2,
    switch_time: float = 0.5,
    width: float = 1e-6,
) -> ModelSpec:
    """sigma switches from rank r_before to rank r_after around switch_time.

    The extra diagonal entries follow a C^1 ramp of the given width, ending at
    switch_time for an increasing rank and starting there for a decreasing one.
    """
    q = d if q is None else q
    _check_dims(d, q, r_before, r_after)
    if width <= 0:
        raise ConfigError(f"width must be positive, got {width}")
    low, high = sorted((r_before, r_after))
    idx = np.arange(min(d, q))
    steady = (idx < low).astype(float)
    moving = ((idx >= low) & (idx < high)).astype(float)
    increasing = r_after > r_before
    change = switch_time - width if increasing else switch_time + width

    def weight(t: Any) -> Any:
        if increasing:
            return _smoothstep((np.asarray(t, dtype=float) - change) / width)
        return 1.0 - _smoothstep((np.asarray(t, dtype=float) - switch_time) / width)

    def sigma_fn(t: Any, state: SimState | None) -> FloatArray:
        w = np.asarray(weight(t))[..., None]
        return _diag(d, q, steady + w * moving)

    def drift_fn(t: Any, state: SimState | None) -> FloatArray:
        return np.zeros(np.shape(t) + (d,))

    return ModelSpec(
        d=d,
        q=q,
        x0=np.zeros(d),
        sigma0=sigma_fn(0.0, None),
        b0=np.zeros(d),
        rank_profile=RankProfile((r_before, r_after), (change,)),
        scenario="rank_switch",
        params={
            "d": d,
            "q": q,
            "r_before": r_before,
            "r_after": r_after,
            "switch_time": switch_time,
            "width": width,
        },
        sigma_fn=sigma_fn,
        drift_fn=drift_fn,
        time_only=True,
    )


def integrated_diffusion(
    d: int = 1, mean_reversion: float = 1.0, eta: float = 1.0, b0: float = 0.0
) -> ModelSpec:
    """sigma = 0 and dX = b dt with an Ornstein-Uhlenbeck drift b."""
    _check_dims(d, d, 0)
    return ModelSpec(
        d=d,
        q=d,
        x0=np.zeros(d),
        sigma0=np.zeros((d, d)),
        b0=np.full(d, b0),
        rank_profile=RankProfile((0,)),
        scenario="integrated_diffusion",
        params={"d": d, "mean_reversion": mean_reversion, "eta": eta, "b0": b0},
        drift_drift=lambda t, state: -mean_reversion * state.b,
        drift_vol=lambda t, state: eta * np.eye(d),
    )


def sde_case(d: int = 2, r: int | None = None, c: float = 1.0) -> ModelSpec:
    """sigma = c * diag(1.5 + sin X^l) on the first r coordinates."""
    r = d if r is None else r
    _check_dims(d, d, r)
    active = (np.arange(d) < r).astype(float)

    def sigma_fn(t: Any, state: SimState | None) -> FloatArray:
        x = np.zeros(d) if state is None else state.x
        return np.diag(c * active * (1.5 + np.sin(x)))

    def sigma_vol(t: Any, state: SimState | None) -> FloatArray:
        x = np.zeros(d) if state is None else state.x
        sigma = sigma_fn(t, state)
        # d sigma^{ll} = c cos(X^l) sigma^{lk} dW^k
        vol = np.zeros((d, d, d))
        idx = np.arange(d)
        vol[idx, idx, :] = (c * active * np.cos(x))[:, None] * sigma
        return vol

    return ModelSpec(
        d=d,
        q=d,
        x0=np.zeros(d),
        sigma0=sigma_fn(0.0, None),
        b0=np.zeros(d),
        rank_profile=RankProfile((r,)),
        scenario="sde_case",
        params={"d": d, "r": r, "c": c},
        sigma_fn=sigma_fn,
        drift_fn=lambda t, state: np.zeros(d),
        sigma_vol=sigma_vol,
    )


def degenerate_d3q1(
    sigma0: tuple[float, float, float] = (1.0, 0.5, -0.5),
    vol: tuple[float, float, float] = (0.5, 1.0, 0.3),
) -> ModelSpec:
    """d = 3, q = 1 with dX^j = sigma^j dW and d sigma^j = v^j dW.

    sigma and v are both d x 1, so rank(sigma) = rank(v) = 1.
    """
    v = np.asarray(vol, dtype=float).reshape(3, 1, 1)
    return ModelSpec(
        d=3,
        q=1,
        x0=np.zeros(3),
        sigma0=np.asarray(sigma0, dtype=float).reshape(3, 1),
        b0=np.zeros(3),
        rank_profile=RankProfile((1,)),
        scenario="degenerate_d3q1",
        params={"sigma0": list(sigma0), "vol": list(vol)},
        sigma_vol=lambda t, state: v,
    )


SCENARIOS: Mapping[str, Callable[..., ModelSpec]] = {
    "constant_rank": constant_rank,
    "rank_switch": rank_switch,
    "integrated_diffusion": integrated_diffusion,
    "sde_case": sde_case,
    "degenerate_d3q1": degenerate_d3q1,
}


def validate_rank_profile(model: ModelSpec, t_max: float = 1.0) -> None:
    """Compare rank(sigma sigma*) with the declared profile on a grid of sample times."""
    for t in np.arange(N_CHECK_TIMES) * (t_max / N_CHECK_TIMES):
        sigma = model.sigma_at(float(t))
        found = rank(sigma @ sigma.T) if np.any(sigma) else 0
        declared = model.rank_profile.rank_at(float(t))
        if found != declared:
            raise ConfigError(
                f"scenario {model.scenario!r}: sigma has rank {found} at t={t}, "
                f"profile declares {declared}"
            )


def scenario(
    name: str, t_max: float = 1.0, fine_step: float | None = None, **params: Any
) -> ModelSpec:
    """Build and validate a built-in scenario.

    ``rank_switch`` switches at ``t_max / 2`` unless ``switch_time`` is given, and
    its ramp spans one simulation step ``fine_step`` unless ``width`` is given.
    """
    builder = SCENARIOS.get(name)
    if builder is None:
        raise ConfigError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
    if name == "rank_switch":
        params.setdefault("switch_time", t_max / 2)
        if fine_step is not None:
            params.setdefault("width", fine_step)
    try:
        model = builder(**params)
    except TypeError as err:
        raise ConfigError(f"bad parameters for scenario {name!r}: {err}") from err
    validate_rank_profile(model, t_max)
    _LOGGER.debug(f"Built scenario {name} with {dict(model.params)}")
    return model
