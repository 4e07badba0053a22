"""Models module."""
import dataclasses
from collections.abc import Callable, Mapping, Sequence
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import NDArray

from volrank.util import floor_ratio

FloatArray = NDArray[np.float64]

EXIT_OK = 0
EXIT_DEGENERATE = 1
EXIT_CONFIG = 2


class VolrankError(Exception):
    """Base class of all volrank errors."""

    exit_code = EXIT_CONFIG


class DomainError(VolrankError, ValueError):
    """An argument lies outside the domain of an operation."""


class TooShortError(VolrankError):
    """A path holds too few observations for a complete block."""

    exit_code = EXIT_DEGENERATE


class DegenerateStatisticError(VolrankError, ArithmeticError):
    """A statistic that is divided by vanished."""

    exit_code = EXIT_DEGENERATE


class GridError(VolrankError, ValueError):
    """Ingested observations are not on an equidistant grid."""


class UnsupportedModelError(VolrankError):
    """The model has no frozen coefficients for the requested oracle."""


class ConfigError(VolrankError, ValueError):
    """Invalid scenario or study configuration."""


# ---------------------------------------------------------------- detalg


@dataclasses.dataclass(frozen=True)
class ColumnSelection:
    """Assignment of each column index to one of ``len(counts)`` source matrices."""

    assignment: tuple[int, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if sum(self.counts) != len(self.assignment):
            raise DomainError(
                f"counts {self.counts} do not sum to {len(self.assignment)} columns"
            )
        for source, count in enumerate(self.counts):
            if self.assignment.count(source) != count:
                raise DomainError(
                    f"assignment {self.assignment} inconsistent with counts {self.counts}"
                )


# ---------------------------------------------------------------- limitlaw


@dataclasses.dataclass(frozen=True, eq=False)
class LimitInput:
    """A point u = (alpha, beta, gamma, a) at which the limit laws are evaluated.

    alpha is d x q, beta is d x d, gamma is d x q x q and a is a d-vector.
    """

    alpha: FloatArray
    beta: FloatArray
    gamma: FloatArray
    a: FloatArray

    def __post_init__(self) -> None:
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        d, q = alpha.shape
        beta = np.asarray(self.beta, dtype=float).reshape(d, d)
        gamma = np.asarray(self.gamma, dtype=float).reshape(d, q, q)
        a = np.asarray(self.a, dtype=float).reshape(d)
        for name, value in (("alpha", alpha), ("beta", beta), ("gamma", gamma), ("a", a)):
            if not np.all(np.isfinite(value)):
                raise DomainError(f"{name} has non-finite entries")
            object.__setattr__(self, name, value)

    @property
    def d(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def q(self) -> int:
        return int(self.alpha.shape[1])

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LimitInput":
        """Build from a JSON mapping; beta, gamma and a default to I, 0, 0."""
        try:
            alpha = np.atleast_2d(np.asarray(data["alpha"], dtype=float))
        except KeyError as err:
            raise ConfigError("limit input needs 'alpha'") from err
        d, q = alpha.shape
        return cls(
            alpha=alpha,
            beta=np.asarray(data.get("beta", np.eye(d)), dtype=float),
            gamma=np.asarray(data.get("gamma", np.zeros((d, q, q))), dtype=float),
            a=np.asarray(data.get("a", np.zeros(d)), dtype=float),
        )

    def asdict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "gamma": self.gamma.tolist(),
            "a": self.a.tolist(),
        }


@dataclasses.dataclass(frozen=True, eq=False)
class PsiDraw:
    """One realization of the d blocks Psi(u, kappa)_i, stored row-wise as (d, 2d)."""

    psi: FloatArray
    kappa: int


@dataclasses.dataclass(frozen=True)
class GammaEstimate:
    """Monte Carlo estimates of Gamma_r, Gamma'_r and Gamma''_r."""

    r: int
    gamma_r: float
    gamma_r_prime: float
    gamma_r_dprime: float
    se_gamma_r: float
    se_gamma_r_prime: float
    se_gamma_r_dprime: float
    se_gap: float
    n_samples: int
    n_substeps: int
    seed: int


@dataclasses.dataclass(frozen=True)
class MonteCarloParams:
    """Sampling parameters of the limit-law estimates."""

    n_samples: int = 20000
    n_substeps: int = 512
    seed: int = 0
    workers: int = 1


@dataclasses.dataclass(frozen=True)
class IntegratedLimits:
    """Time integrals of the limit quantities over [0, T]."""

    r: int
    t_max: float
    s_r: float
    v11: float
    v22: float
    v12: float
    theta11: float
    theta22: float
    theta12: float
    v_total: float
    bar_v: float
    p: float


# ---------------------------------------------------------------- itosim


class SimState(NamedTuple):
    """Current values of the coupled system (X, sigma, b)."""

    x: FloatArray
    sigma: FloatArray
    b: FloatArray


Coefficient = Callable[[Any, SimState | None], FloatArray]


@dataclasses.dataclass(frozen=True)
class RankProfile:
    """Piecewise constant map t -> r_t.

    ``ranks[k]`` holds on ``[breakpoints[k - 1], breakpoints[k])``; the first rank
    starts at time 0 and the last one never ends.
    """

    ranks: tuple[int, ...]
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.ranks) != len(self.breakpoints) + 1:
            raise ConfigError("a rank profile needs one more rank than breakpoints")
        if list(self.breakpoints) != sorted(self.breakpoints):
            raise ConfigError("rank profile breakpoints must be increasing")

    def rank_at(self, t: float) -> int:
        for k, breakpoint in enumerate(self.breakpoints):
            if t < breakpoint:
                return self.ranks[k]
        return self.ranks[-1]

    def max_rank(self, t_max: float) -> int:
        """R_T, the supremum of r_s over [0, T)."""
        ranks = [self.ranks[0]]
        ranks += [
            rank
            for breakpoint, rank in zip(self.breakpoints, self.ranks[1:])
            if breakpoint < t_max
        ]
        return max(ranks)

    def integral_power(self, p: float, t_max: float) -> float:
        """The integral of r_s^p over [0, T]."""
        edges = [0.0] + [min(max(b, 0.0), t_max) for b in self.breakpoints] + [t_max]
        return sum(
            (hi - lo) * float(rank) ** p
            for lo, hi, rank in zip(edges[:-1], edges[1:], self.ranks)
        )

    def const_rank_limit(self, p: float, t_max: float) -> float:
        """Limit of B(n, p, T): the integral of r_s^p minus T R_T^p."""
        return self.integral_power(p, t_max) - t_max * float(self.max_rank(t_max)) ** p


@dataclasses.dataclass(frozen=True, eq=False)
class ModelSpec:
    """Coefficients of a continuous Ito semimartingale and its declared rank.

    sigma and b either follow their own Ito equations (``sigma_drift`` a,
    ``sigma_vol`` v, ``drift_drift`` a', ``drift_vol`` v') started at ``sigma0`` and
    ``b0``, or are given in closed form by ``sigma_fn`` / ``drift_fn``. When
    ``time_only`` is set the closed forms depend on time alone and accept a vector of
    times with ``state=None``, returning stacked values. With a closed-form sigma,
    ``sigma_vol`` only describes v for the latent record and the oracles.
    """

    d: int
    q: int
    x0: FloatArray
    sigma0: FloatArray
    b0: FloatArray
    rank_profile: RankProfile
    scenario: str = "custom"
    params: Mapping[str, Any] = dataclasses.field(default_factory=dict)
    sigma_fn: Coefficient | None = None
    drift_fn: Coefficient | None = None
    sigma_drift: Coefficient | None = None
    sigma_vol: Coefficient | None = None
    drift_drift: Coefficient | None = None
    drift_vol: Coefficient | None = None
    time_only: bool = False

    def __post_init__(self) -> None:
        if self.d < 1 or self.q < 1:
            raise ConfigError(f"dimensions must be positive, got d={self.d}, q={self.q}")
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).reshape(self.d))
        object.__setattr__(
            self, "sigma0", np.asarray(self.sigma0, dtype=float).reshape(self.d, self.q)
        )
        object.__setattr__(self, "b0", np.asarray(self.b0, dtype=float).reshape(self.d))
        if self.time_only and (self.sigma_fn is None or self.drift_fn is None):
            raise ConfigError("time_only models need closed-form sigma and drift")

    @property
    def initial_state(self) -> SimState:
        return SimState(self.x0.copy(), self.sigma0.copy(), self.b0.copy())

    def sigma_at(self, t: float) -> FloatArray:
        """sigma at time t along the initial state (exact for time-only models)."""
        if self.sigma_fn is None:
            return self.sigma0
        if self.time_only:
            return np.asarray(self.sigma_fn(np.array([t]), None))[0]
        return np.asarray(self.sigma_fn(t, self.initial_state))

    def vol_of_vol_at(self, t: float, state: SimState | None = None) -> FloatArray:
        """v at time t, zero when the model declares none."""
        if self.sigma_vol is None:
            return np.zeros((self.d, self.q, self.q))
        return np.asarray(self.sigma_vol(t, state or self.initial_state))


@dataclasses.dataclass(frozen=True, eq=False)
class Latent:
    """Coefficient paths sampled at the observation times."""

    sigma: FloatArray
    b: FloatArray
    v: FloatArray


@dataclasses.dataclass(frozen=True, eq=False)
class PathSample:
    """Equidistant observations X_{i delta_n}, i = 0..floor(T / delta_n)."""

    delta_n: float
    t_max: float
    obs: FloatArray
    seed: int | None = None
    scenario: str = "custom"
    latent: Latent | None = None

    def __post_init__(self) -> None:
        if self.delta_n <= 0:
            raise DomainError(f"delta_n must be positive, got {self.delta_n}")
        obs = np.asarray(self.obs, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        expected = floor_ratio(self.t_max, self.delta_n) + 1
        if obs.shape[0] != expected:
            raise DomainError(
                f"expected {expected} observations for T={self.t_max}, "
                f"delta_n={self.delta_n}; got {obs.shape[0]}"
            )
        if not np.all(np.isfinite(obs)):
            raise DomainError("observations contain non-finite values")
        obs.setflags(write=False)
        object.__setattr__(self, "obs", obs)

    @property
    def d(self) -> int:
        return int(self.obs.shape[1])

    @property
    def n_increments(self) -> int:
        return int(self.obs.shape[0] - 1)

    def times(self) -> FloatArray:
        return np.arange(self.obs.shape[0]) * self.delta_n

    def increments(self) -> FloatArray:
        return np.diff(self.obs, axis=0)

    def metadata(self) -> dict[str, Any]:
        return {
            "delta_n": self.delta_n,
            "t_max": self.t_max,
            "seed": self.seed,
            "scenario": self.scenario,
            "d": self.d,
        }


# ---------------------------------------------------------------- ranktest


@dataclasses.dataclass(frozen=True, eq=False)
class PerturbationConfig:
    """The statistician's randomization: the matrix theta and the W' seed."""

    theta: FloatArray | None = None
    seed_wprime: int = 0

    def __post_init__(self) -> None:
        if self.theta is not None:
            theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
            if theta.shape[0] != theta.shape[1]:
                raise DomainError(f"theta must be square, got shape {theta.shape}")
            if np.linalg.matrix_rank(theta) < theta.shape[0]:
                raise DomainError("theta must be invertible")
            object.__setattr__(self, "theta", theta)

    def theta_for(self, d: int) -> FloatArray:
        if self.theta is None:
            return np.eye(d)
        if self.theta.shape != (d, d):
            raise DomainError(f"theta has shape {self.theta.shape}, path has d={d}")
        return self.theta


@dataclasses.dataclass(frozen=True, eq=False)
class PerturbedBlocks:
    """Per-block squared determinants of the kappa = 1 and kappa = 2 statistics."""

    f1: FloatArray
    f2: FloatArray
    delta_n: float
    d: int
    t_max: float

    def __post_init__(self) -> None:
        if self.f1.shape != self.f2.shape:
            raise DomainError("f1 and f2 must have the same length")

    @property
    def n_blocks(self) -> int:
        return int(self.f1.shape[0])

    @property
    def block_span(self) -> float:
        """Time covered by one block, 2 d delta_n."""
        return 2 * self.d * self.delta_n


@dataclasses.dataclass(frozen=True)
class MaxRankDecision:
    """Outcome of one maximal-rank test."""

    hypothesis: str
    kind: str
    r: int
    alpha: float
    critical: float
    standardized: float
    reject: bool


@dataclasses.dataclass(frozen=True)
class RankTestReport:
    """R_hat(n, T), its variance estimators and the test decisions."""

    d: int
    delta_n: float
    t_max: float
    n_blocks: int
    s1: float
    s2: float
    r_hat: float
    r_nearest: int
    r_rounded: int
    v11: float
    v22: float
    v12: float
    v_feasible: float
    v_feasible_formula: float
    v_prime: float
    v_prime_negative: bool
    decisions: tuple[MaxRankDecision, ...] = ()


@dataclasses.dataclass(frozen=True, eq=False)
class SpotSeries:
    """Spot rank estimates on windows of k_n consecutive blocks."""

    k_n: int
    values: FloatArray
    delta_n: float
    d: int

    @property
    def valid(self) -> NDArray[np.bool_]:
        return np.isfinite(self.values)

    @property
    def n_invalid(self) -> int:
        return int(np.count_nonzero(~self.valid))

    def times(self) -> FloatArray:
        """Start time of each window."""
        return np.arange(self.values.shape[0]) * 2 * self.d * self.delta_n

    def median(self) -> float:
        values = self.values[self.valid]
        return float(np.median(values)) if values.size else float("nan")


@dataclasses.dataclass(frozen=True)
class ConstRankDecision:
    """Outcome of the constant-rank test."""

    alpha: float
    critical: float
    reject: bool
    null: str
    zero_rank_reject: bool | None = None
    combined_reject: bool | None = None


@dataclasses.dataclass(frozen=True, eq=False)
class ConstRankReport:
    """Statistics of the constant-rank test."""

    d: int
    delta_n: float
    t_max: float
    k_n: int
    p: float
    spot: SpotSeries
    r_hat: float
    a_p: float
    a_n_t: float
    n_windows: int
    b_stat: float
    vbar11: float
    vbar22: float
    vbar12: float
    vbar: float
    z_stat: float
    n_spot_invalid: int
    n_vbar_skipped: int
    decisions: tuple[ConstRankDecision, ...] = ()


# ---------------------------------------------------------------- harness


@dataclasses.dataclass(frozen=True)
class StudyConfig:
    """Monte Carlo study definition."""

    scenario: str = "constant_rank"
    model_params: Mapping[str, Any] = dataclasses.field(default_factory=dict)
    n_obs: int = 20000
    t_max: float = 1.0
    theta: Sequence[Sequence[float]] | None = None
    alphas: tuple[float, ...] = (0.05,)
    hypotheses: tuple[str, ...] = ()
    p: float = 1.0
    k_n: int | None = None
    const_rank: bool = True
    n_paths: int = 100
    master_seed: int = 0
    wprime_salt: int = 0
    refine: int = 8
    out_dir: str | None = None

    @property
    def delta_n(self) -> float:
        return self.t_max / self.n_obs


@dataclasses.dataclass(frozen=True)
class PathRecord:
    """Per-path outcome of a study; ``error`` is set when the pipeline failed."""

    index: int
    path_seed: int
    wprime_seed: int
    r_hat: float | None = None
    r_rounded: int | None = None
    v_feasible: float | None = None
    square_identity_gap: float | None = None
    standardized: float | None = None
    rejections: Mapping[str, bool] = dataclasses.field(default_factory=dict)
    b_stat: float | None = None
    z_stat: float | None = None
    spot_median: float | None = None
    error: str | None = None


@dataclasses.dataclass(frozen=True)
class StudyAggregate:
    """Aggregates over the per-path records of a study."""

    n_paths: int
    n_failed: int
    reject_freq: Mapping[str, float]
    reject_se: Mapping[str, float]
    r_hat_mean: float
    r_hat_sd: float
    rounded_hit_rate: float
    ks_distance: float | None
    ks_pvalue: float | None
    b_mean: float | None
    b_limit: float | None
    spot_median_mean: float | None


@dataclasses.dataclass(frozen=True)
class StudyResult:
    """Records, aggregate and provenance of a study."""

    config: StudyConfig
    records: tuple[PathRecord, ...]
    aggregate: StudyAggregate
    provenance: Mapping[str, Any]
