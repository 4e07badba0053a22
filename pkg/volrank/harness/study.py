"""Monte Carlo studies over many simulated paths."""
import dataclasses
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np

import volrank
from volrank import db
from volrank.harness.normality import MIN_KS_SAMPLES, ks_normality
from volrank.itosim import scenario, simulate
from volrank.models import (
    ConfigError,
    DomainError,
    ModelSpec,
    PathRecord,
    PerturbationConfig,
    StudyAggregate,
    StudyConfig,
    StudyResult,
    VolrankError,
)
from volrank.ranktest import analyze_path, parse_hypothesis
from volrank.ranktest.maxrank import square_identity_gap, standardized_statistic
from volrank.util import Stream, config_hash, derive_int_seed, get_logger

_LOGGER = get_logger("study")

_FIELDS = {f.name for f in dataclasses.fields(StudyConfig)}


def study_config_from_dict(data: Mapping[str, Any]) -> StudyConfig:
    """Build a validated StudyConfig from parsed JSON."""
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown study config keys: {', '.join(unknown)}")
    values = dict(data)
    for key in ("alphas", "hypotheses"):
        if key in values:
            values[key] = tuple(values[key])
    if values.get("k_n") == "auto":
        values["k_n"] = None
    if values.get("theta") is not None:
        values["theta"] = tuple(tuple(float(x) for x in row) for row in values["theta"])
    try:
        config = StudyConfig(**values)
    except TypeError as err:
        raise ConfigError(str(err)) from err
    validate_study_config(config)
    return config


def validate_study_config(config: StudyConfig) -> None:
    if config.n_paths < 1:
        raise ConfigError(f"n_paths must be at least 1, got {config.n_paths}")
    if config.t_max <= 0:
        raise ConfigError(f"t_max must be positive, got {config.t_max}")
    if not config.alphas or any(not 0 < a < 1 for a in config.alphas):
        raise ConfigError(f"every alpha must lie in (0, 1), got {config.alphas}")
    if config.p <= 0:
        raise ConfigError(f"p must be positive, got {config.p}")
    for text in config.hypotheses:
        try:
            parse_hypothesis(text)
        except DomainError as err:
            raise ConfigError(str(err)) from err


def study_hash(config: StudyConfig) -> str:
    """Hash of everything that determines the study results."""
    content = dataclasses.asdict(config)
    content.pop("out_dir")
    content["version"] = volrank.__version__
    return config_hash(content)


def study_model(config: StudyConfig) -> ModelSpec:
    return scenario(
        config.scenario,
        t_max=config.t_max,
        fine_step=config.delta_n / config.refine,
        **dict(config.model_params),
    )


def path_seeds(config: StudyConfig, index: int) -> tuple[int, int]:
    """Seeds of the data stream and of the perturbation stream of path ``index``."""
    return (
        derive_int_seed(config.master_seed, Stream.PATH, index),
        derive_int_seed(config.master_seed, Stream.WPRIME, index, config.wprime_salt),
    )


def rejection_key(label: str, alpha: float) -> str:
    return f"{label}@{alpha:g}"


def run_path(config: StudyConfig, model: ModelSpec, index: int) -> PathRecord:
    """Simulate path ``index`` and run the full pipeline; failures go into the record."""
    path_seed, wprime_seed = path_seeds(config, index)
    try:
        path = simulate(model, config.t_max, config.delta_n, config.refine, path_seed)
        analysis = analyze_path(
            path,
            PerturbationConfig(theta=config.theta, seed_wprime=wprime_seed),
            config.hypotheses,
            config.alphas,
            config.p,
            config.k_n,
            config.const_rank,
        )
    except ConfigError:
        raise
    except VolrankError as err:
        _LOGGER.exception(f"Path {index} failed")
        return PathRecord(
            index=index,
            path_seed=path_seed,
            wprime_seed=wprime_seed,
            error=f"{type(err).__name__}: {err}",
        )

    rank = analysis.rank
    rejections = {
        rejection_key(decision.hypothesis, decision.alpha): decision.reject
        for decision in rank.decisions
    }
    const = analysis.const_rank
    if const is not None:
        for const_decision in const.decisions:
            rejections[rejection_key("const", const_decision.alpha)] = const_decision.reject
            rejections[rejection_key("const_double", const_decision.alpha)] = bool(
                const_decision.combined_reject
            )
    true_rank = model.rank_profile.max_rank(config.t_max)
    record = PathRecord(
        index=index,
        path_seed=path_seed,
        wprime_seed=wprime_seed,
        r_hat=rank.r_hat,
        r_rounded=rank.r_rounded,
        v_feasible=rank.v_feasible,
        square_identity_gap=square_identity_gap(rank),
        standardized=standardized_statistic(
            rank.r_hat, true_rank, rank.delta_n, rank.v_feasible
        ),
        rejections=rejections,
        b_stat=None if const is None else const.b_stat,
        z_stat=None if const is None else const.z_stat,
        spot_median=None if const is None else const.spot.median(),
    )
    _LOGGER.debug(f"Path {index}: R_hat={rank.r_hat:.6f}")
    return record


def _mean(values: Sequence[float]) -> float | None:
    finite = [v for v in values if v is not None and math.isfinite(v)]
    return math.fsum(finite) / len(finite) if finite else None


def aggregate_records(
    records: Sequence[PathRecord], true_rank: int, b_limit: float | None
) -> StudyAggregate:
    """Aggregate per-path records; depends on nothing but the records."""
    ok = [r for r in records if r.error is None]
    n_ok = len(ok)
    keys = sorted({key for r in ok for key in r.rejections})
    reject_freq: dict[str, float] = {}
    reject_se: dict[str, float] = {}
    for key in keys:
        hits = [bool(r.rejections[key]) for r in ok if key in r.rejections]
        freq = sum(hits) / len(hits)
        reject_freq[key] = freq
        reject_se[key] = math.sqrt(freq * (1 - freq) / len(hits))

    r_hats = np.array([r.r_hat for r in ok], dtype=float)
    standardized = [
        r.standardized for r in ok if r.standardized is not None and math.isfinite(r.standardized)
    ]
    ks_distance = ks_pvalue = None
    if len(standardized) >= MIN_KS_SAMPLES:
        ks_distance, ks_pvalue = ks_normality(standardized)

    b_values = [r.b_stat for r in ok if r.b_stat is not None]
    return StudyAggregate(
        n_paths=len(records),
        n_failed=len(records) - n_ok,
        reject_freq=reject_freq,
        reject_se=reject_se,
        r_hat_mean=float(np.mean(r_hats)) if n_ok else math.nan,
        r_hat_sd=float(np.std(r_hats, ddof=1)) if n_ok > 1 else 0.0,
        rounded_hit_rate=(sum(r.r_rounded == true_rank for r in ok) / n_ok) if n_ok else 0.0,
        ks_distance=ks_distance,
        ks_pvalue=ks_pvalue,
        b_mean=_mean(b_values),
        b_limit=b_limit if b_values else None,
        spot_median_mean=_mean([r.spot_median for r in ok if r.spot_median is not None]),
    )


def record_from_dict(data: Mapping[str, Any]) -> PathRecord:
    fields = {f.name for f in dataclasses.fields(PathRecord)}
    return PathRecord(**{k: v for k, v in data.items() if k in fields})


def _targets(model: ModelSpec, config: StudyConfig) -> tuple[int, float]:
    profile = model.rank_profile
    return profile.max_rank(config.t_max), profile.const_rank_limit(config.p, config.t_max)


def run_study(
    config: StudyConfig, threads: int = 1, persist: bool = True
) -> StudyResult:
    """Run the pipeline on ``n_paths`` simulated paths and aggregate.

    Path ``i`` always uses the seeds derived from ``(master_seed, i)``, and records
    are kept in index order, so the result does not depend on ``threads``.
    """
    validate_study_config(config)
    model = study_model(config)
    key = study_hash(config)
    if config.n_obs < 2 * model.d:
        raise ConfigError(f"n_obs must be at least 2d = {2 * model.d}, got {config.n_obs}")
    _LOGGER.info(
        f"Starting study {key}: {config.scenario}, {config.n_paths} paths, "
        f"n_obs={config.n_obs}"
    )

    def _one(index: int) -> PathRecord:
        return run_path(config, model, index)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            records = tuple(executor.map(_one, range(config.n_paths)))
    else:
        records = tuple(_one(index) for index in range(config.n_paths))

    true_rank, b_limit = _targets(model, config)
    aggregate = aggregate_records(records, true_rank, b_limit)
    provenance = {
        "config_hash": key,
        "master_seed": config.master_seed,
        "version": volrank.__version__,
        "true_max_rank": true_rank,
    }
    if persist:
        db.study_upsert(key, dataclasses.asdict(config), provenance)
        db.path_upsert_many(key, [dataclasses.asdict(r) for r in records])
    _LOGGER.info(f"Finished study {key}: {aggregate.n_failed} of {config.n_paths} paths failed")
    return StudyResult(config=config, records=records, aggregate=aggregate, provenance=provenance)


def study_aggregate_from_db(config: StudyConfig) -> StudyAggregate:
    """Recompute the aggregate of a persisted study from its stored records."""
    key = study_hash(config)
    stored = db.path_records(key)
    if not stored:
        raise ConfigError(f"no stored records for study {key}")
    model = study_model(config)
    true_rank, b_limit = _targets(model, config)
    return aggregate_records([record_from_dict(r) for r in stored], true_rank, b_limit)
