"""Standard normal quantiles."""
import math

from scipy import special

from volrank.models import DomainError

_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425


def _poly(coeffs: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _tail(p: float) -> float:
    q = math.sqrt(-2.0 * math.log(p))
    return _poly(_C, q) / (_poly(_D, q) * q + 1.0)


def norm_cdf(x: float) -> float:
    return float(special.ndtr(x))


def norm_ppf(p: float) -> float:
    """Inverse of the standard normal CDF.

    Rational approximation (relative error about 1e-9) followed by one Halley
    step on the CDF.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0:
        return -math.inf
    if p == 1.0:
        return math.inf

    if p < _P_LOW:
        x = _tail(p)
    elif p > 1.0 - _P_LOW:
        x = -_tail(1.0 - p)
    else:
        q = p - 0.5
        r = q * q
        x = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)

    err = norm_cdf(x) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def norm_ppf_bisect(p: float, tol: float = 1e-14) -> float:
    """Inverse CDF by bisection; slow, used as a reference."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if norm_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def z_two_sided(alpha: float) -> float:
    """z with P(|N(0, 1)| > z) = alpha."""
    _check_level(alpha)
    return norm_ppf(1.0 - alpha / 2.0)


def z_one_sided(alpha: float) -> float:
    """z' with P(N(0, 1) > z') = alpha."""
    _check_level(alpha)
    return norm_ppf(1.0 - alpha)
