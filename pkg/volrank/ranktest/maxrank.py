"""Rank estimator, feasible variance and the maximal-rank tests."""
import math
import re
from collections.abc import Iterable

from volrank.models import (
    DegenerateStatisticError,
    DomainError,
    MaxRankDecision,
    PerturbedBlocks,
    RankTestReport,
)
from volrank.ranktest.blocks import s_statistics, variance_estimators
from volrank.ranktest.quantile import z_one_sided, z_two_sided
from volrank.util import get_logger

_LOGGER = get_logger("ranktest")

LOG2 = math.log(2.0)
KINDS = ("equal", "leq", "geq")
_HYPOTHESIS = re.compile(r"^\s*(=|==|<=|≤|>=|≥)\s*(\d+)\s*$")
_KIND_OF = {"=": "equal", "==": "equal", "<=": "leq", "≤": "leq", ">=": "geq", "≥": "geq"}
_SYMBOL_OF = {"equal": "=", "leq": "<=", "geq": ">="}


def parse_hypothesis(text: str) -> tuple[str, int]:
    """Parse ``"=r"``, ``"<=r"`` or ``">=r"`` into (kind, r)."""
    match = _HYPOTHESIS.match(text)
    if not match:
        raise DomainError(f"hypothesis must look like '=1', '<=1' or '>=1', got {text!r}")
    return _KIND_OF[match.group(1)], int(match.group(2))


def hypothesis_label(kind: str, r: int) -> str:
    return f"{_SYMBOL_OF[kind]}{r}"


def rank_estimate(s1: float, s2: float, d: int) -> float:
    """R_hat = d - log2(S2 / S1); not clamped to [0, d]."""
    if s1 <= 0 or s2 <= 0:
        raise DegenerateStatisticError(
            f"rank estimate needs positive statistics, got S1={s1}, S2={s2}"
        )
    return d - math.log2(s2 / s1)


def _weights(r_hat: float, d: int) -> tuple[float, float]:
    w = 2.0 ** (r_hat - d)
    return w * w, 2.0 * w


def feasible_variance(
    s1: float, r_hat: float, v11: float, v22: float, v12: float, d: int
) -> float:
    """V(n,T) from the variance estimators.

    The numerator is a sum of squares; negative values at rounding level are set
    to zero, larger ones mean the inputs do not come from one set of blocks.
    """
    if s1 <= 0:
        raise DegenerateStatisticError(f"feasible variance needs S1 > 0, got {s1}")
    w22, w12 = _weights(r_hat, d)
    numerator = v11 + w22 * v22 - w12 * v12
    if numerator < 0:
        magnitude = v11 + w22 * v22 + w12 * abs(v12)
        if -numerator > 1e-10 * magnitude:
            raise DomainError(
                f"variance estimators give a negative numerator {numerator}; "
                "V12^2 <= V11 V22 must hold"
            )
        numerator = 0.0
    return numerator / (s1 * LOG2) ** 2


def square_form_variance(blocks: PerturbedBlocks, s1: float, r_hat: float) -> float:
    """V(n,T) as 4 d^2 delta_n sum (f1 - 2^(R_hat - d) f2)^2 / (S1 log 2)^2."""
    if s1 <= 0:
        raise DegenerateStatisticError(f"feasible variance needs S1 > 0, got {s1}")
    residual = blocks.f1 - 2.0 ** (r_hat - blocks.d) * blocks.f2
    numerator = 4 * blocks.d**2 * blocks.delta_n * math.fsum(residual * residual)
    return numerator / (s1 * LOG2) ** 2


def v_prime(s1: float, r_hat: float, v11: float, v12: float, d: int) -> float:
    """The alternative variance estimator (V11 - 2^(1 + R_hat - d) V12) / (S1 log 2)^2.

    Consistent as well, but it can be negative.
    """
    if s1 <= 0:
        raise DegenerateStatisticError(f"variance needs S1 > 0, got {s1}")
    _, w12 = _weights(r_hat, d)
    return (v11 - w12 * v12) / (s1 * LOG2) ** 2


def standardized_statistic(r_hat: float, r: int, delta_n: float, v: float) -> float:
    """(R_hat - r) / sqrt(delta_n V(n,T))."""
    diff = r_hat - r
    scale = math.sqrt(delta_n * v)
    if scale == 0.0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / scale


def test_max_rank(
    r_hat: float,
    v_feasible: float,
    delta_n: float,
    d: int,
    r: int,
    alpha: float,
    kind: str = "equal",
) -> MaxRankDecision:
    """Test R_T = r, R_T <= r or R_T >= r at level alpha."""
    if not 0 <= r <= d:
        raise DomainError(f"r must lie in 0..{d}, got {r}")
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    band = math.sqrt(delta_n * v_feasible)
    if kind == "equal":
        critical = z_two_sided(alpha)
        reject = abs(r_hat - r) > critical * band
    elif kind == "leq":
        critical = z_one_sided(alpha)
        reject = r_hat > r + critical * band
    else:
        critical = z_one_sided(alpha)
        reject = r_hat < r - critical * band
    return MaxRankDecision(
        hypothesis=hypothesis_label(kind, r),
        kind=kind,
        r=r,
        alpha=alpha,
        critical=critical,
        standardized=standardized_statistic(r_hat, r, delta_n, v_feasible),
        reject=reject,
    )


test_max_rank.__test__ = False  # type: ignore[attr-defined]


def rank_test_report(
    blocks: PerturbedBlocks,
    hypotheses: Iterable[str] = (),
    alphas: Iterable[float] = (0.05,),
) -> RankTestReport:
    """Compute every statistic of the maximal-rank test and the requested decisions."""
    d = blocks.d
    s1, s2 = s_statistics(blocks)
    r_hat = rank_estimate(s1, s2, d)
    v11, v22, v12 = variance_estimators(blocks)
    v_formula = feasible_variance(s1, r_hat, v11, v22, v12, d)
    v_square = square_form_variance(blocks, s1, r_hat)
    v_alt = v_prime(s1, r_hat, v11, v12, d)
    r_nearest = int(math.floor(r_hat + 0.5))

    decisions = []
    for alpha in alphas:
        for text in hypotheses:
            kind, r = parse_hypothesis(text)
            decisions.append(test_max_rank(r_hat, v_square, blocks.delta_n, d, r, alpha, kind))

    report = RankTestReport(
        d=d,
        delta_n=blocks.delta_n,
        t_max=blocks.t_max,
        n_blocks=blocks.n_blocks,
        s1=s1,
        s2=s2,
        r_hat=r_hat,
        r_nearest=r_nearest,
        r_rounded=min(max(r_nearest, 0), d),
        v11=v11,
        v22=v22,
        v12=v12,
        v_feasible=v_square,
        v_feasible_formula=v_formula,
        v_prime=v_alt,
        v_prime_negative=v_alt < 0,
        decisions=tuple(decisions),
    )
    _LOGGER.debug(f"R_hat={r_hat:.6f}, V(n,T)={v_square:.6g} over {blocks.n_blocks} blocks")
    return report


def square_identity_gap(report: RankTestReport) -> float:
    """Relative difference of the two forms of V(n,T)."""
    scale = max(abs(report.v_feasible), abs(report.v_feasible_formula))
    if scale == 0.0:
        return 0.0
    return abs(report.v_feasible - report.v_feasible_formula) / scale
