"""Spot rank estimators and the constant-rank test."""
import math

import numpy as np

from volrank.models import (
    ConstRankDecision,
    ConstRankReport,
    DegenerateStatisticError,
    DomainError,
    MaxRankDecision,
    PerturbedBlocks,
    SpotSeries,
)
from volrank.ranktest.blocks import cumulative_s
from volrank.ranktest.maxrank import LOG2
from volrank.ranktest.quantile import z_one_sided
from volrank.util import floor_ratio, get_logger

_LOGGER = get_logger("ranktest")

CONST_RANK_NULL = "rank constant on [0, T] with R_T >= 1"
MIN_WINDOWS = 2
AUTO_WINDOWS = 50


def default_kn(delta_n: float, d: int) -> int:
    """max(4d, ceil(delta_n^(-4/5))), so that k_n delta_n^(3/4) -> inf and k_n delta_n -> 0."""
    if not 0.0 < delta_n < 1.0:
        raise DomainError(f"delta_n must lie in (0, 1), got {delta_n}")
    # the factor absorbs pow() rounding above exact integers such as 1e-5 ** -0.8
    return max(4 * d, math.ceil(delta_n ** (-0.8) * (1 - 1e-12)))


def window_count(t_max: float, k_n: int, block_span: float) -> int:
    """Number of non-overlapping spot windows entering A(p)."""
    return max(floor_ratio(t_max, k_n * block_span) - 1, 0)


def auto_kn(blocks: PerturbedBlocks) -> int:
    """default_kn capped so that the path holds at least AUTO_WINDOWS windows.

    At n = 20000 and d = 2 the uncapped rule gives 2760 of the 5000 blocks and
    a single window; the cap gives k_n = 100.
    """
    cap = blocks.n_blocks // AUTO_WINDOWS
    return max(4 * blocks.d, min(default_kn(blocks.delta_n, blocks.d), cap))


def spot_rank_series(blocks: PerturbedBlocks, k_n: int) -> SpotSeries:
    """R_hat on every window of k_n consecutive blocks [i, i + k_n).

    Windows whose f1 or f2 sum vanishes get NaN and are counted as invalid.
    """
    d = blocks.d
    if k_n < 4 * d:
        raise DomainError(f"k_n must be at least 4d = {4 * d}, got {k_n}")
    if k_n > blocks.n_blocks:
        raise DomainError(f"k_n={k_n} exceeds the {blocks.n_blocks} available blocks")
    cs1, cs2 = cumulative_s(blocks)
    w1 = cs1[k_n:] - cs1[:-k_n]
    w2 = cs2[k_n:] - cs2[:-k_n]
    values = np.full(w1.shape, np.nan)
    valid = (w1 > 0) & (w2 > 0)
    values[valid] = d - np.log2(w2[valid] / w1[valid])
    spot = SpotSeries(k_n=k_n, values=values, delta_n=blocks.delta_n, d=d)
    if spot.n_invalid:
        _LOGGER.warning(f"{spot.n_invalid} spot windows have a vanishing statistic")
    return spot


def const_rank_statistics(
    blocks: PerturbedBlocks,
    spot: SpotSeries,
    p: float,
    r_hat: float,
    s1: float,
    t_max: float | None = None,
) -> ConstRankReport:
    """A(p), a(n,T), B(n,p,T), the estimators of the variance of B and Z(n,p,T)."""
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}")
    if s1 <= 0:
        raise DegenerateStatisticError(f"constant-rank statistics need S1 > 0, got {s1}")
    d, delta_n, k_n = blocks.d, blocks.delta_n, spot.k_n
    t_max = blocks.t_max if t_max is None else t_max
    window = k_n * blocks.block_span

    n_windows = window_count(t_max, k_n, blocks.block_span)
    if n_windows < 1:
        raise DomainError(
            f"k_n={k_n} leaves no complete pair of windows in [0, {t_max}]; "
            "the test cannot reject"
        )
    sampled = spot.values[np.arange(n_windows) * k_n]
    sampled = sampled[np.isfinite(sampled)]
    capped = np.minimum(np.abs(sampled) ** p, float(d + 1) ** p)
    a_p = window * math.fsum(capped)
    a_n_t = window * n_windows
    b_stat = a_p - a_n_t * abs(r_hat) ** p

    cs1, _ = cumulative_s(blocks)
    n_terms = max(floor_ratio(t_max, blocks.block_span) - k_n, 0)
    local = cs1[k_n : k_n + n_terms] - cs1[:n_terms]
    usable = local > 0
    n_skipped = int(np.count_nonzero(~usable))
    if n_skipped:
        _LOGGER.warning(f"{n_skipped} variance summands skipped on vanishing S1 windows")
    weight = np.zeros(n_terms)
    weight[usable] = (window / local[usable] - t_max / s1) ** 2
    f1, f2 = blocks.f1[:n_terms], blocks.f2[:n_terms]

    prefactor = 4 * d**2 * delta_n ** (1 + 2 * d - 2 * r_hat)
    vbar11 = prefactor * math.fsum(weight * f1 * f1)
    vbar22 = prefactor * math.fsum(weight * f2 * f2)
    vbar12 = prefactor * math.fsum(weight * f1 * f2)
    # delta_n^(2(R_hat - d)) times the weighted combination, as a sum of squares
    residual = f1 - 2.0 ** (r_hat - d) * f2
    combination = 4 * d**2 * delta_n * math.fsum(weight * residual * residual)
    vbar = (p * abs(r_hat) ** (p - 1) / LOG2) ** 2 * combination

    z_stat = _z_statistic(b_stat, delta_n, vbar)
    report = ConstRankReport(
        d=d,
        delta_n=delta_n,
        t_max=t_max,
        k_n=k_n,
        p=p,
        spot=spot,
        r_hat=r_hat,
        a_p=a_p,
        a_n_t=a_n_t,
        n_windows=n_windows,
        b_stat=b_stat,
        vbar11=vbar11,
        vbar22=vbar22,
        vbar12=vbar12,
        vbar=vbar,
        z_stat=z_stat,
        n_spot_invalid=spot.n_invalid,
        n_vbar_skipped=n_skipped,
    )
    _LOGGER.debug(f"B={b_stat:.6g}, Vbar={vbar:.6g}, Z={z_stat:.6g} with k_n={k_n}")
    return report


def _capped_variance(delta_n: float, vbar: float) -> float:
    return delta_n * min(vbar, 1.0 / math.sqrt(delta_n))


def _z_statistic(b_stat: float, delta_n: float, vbar: float) -> float:
    scale = math.sqrt(_capped_variance(delta_n, vbar))
    if scale == 0.0:
        return 0.0 if b_stat == 0 else math.copysign(math.inf, b_stat)
    return b_stat / scale


def test_const_rank(
    report: ConstRankReport,
    alpha: float,
    zero_rank: MaxRankDecision | None = None,
) -> ConstRankDecision:
    """Reject constancy of the rank when B < -z'_alpha sqrt(delta_n (Vbar ^ delta_n^(-1/2))).

    The B-test has the null "constant rank with R_T >= 1". Passing the decision of
    the "<=0" maximal-rank test adds the double test of plain constancy, which
    rejects only when both tests reject.
    """
    if zero_rank is not None and (zero_rank.kind != "leq" or zero_rank.r != 0):
        raise DomainError(f"the double test needs the '<=0' decision, got {zero_rank.hypothesis}")
    critical = z_one_sided(alpha)
    threshold = -critical * math.sqrt(_capped_variance(report.delta_n, report.vbar))
    reject = report.b_stat < threshold
    zero_reject = None if zero_rank is None else zero_rank.reject
    return ConstRankDecision(
        alpha=alpha,
        critical=critical,
        reject=reject,
        null=CONST_RANK_NULL,
        zero_rank_reject=zero_reject,
        combined_reject=None if zero_reject is None else (reject and zero_reject),
    )


test_const_rank.__test__ = False  # type: ignore[attr-defined]
