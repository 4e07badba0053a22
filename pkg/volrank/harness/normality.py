"""Normality diagnostics of standardized statistics."""
from collections.abc import Iterable

import numpy as np
from scipy import stats

from volrank.models import DomainError

MIN_KS_SAMPLES = 20


def ks_normality(samples: Iterable[float]) -> tuple[float, float]:
    """One-sample KS distance to N(0, 1) and its asymptotic p-value."""
    values = np.asarray(list(samples), dtype=float)
    if values.shape[0] < MIN_KS_SAMPLES:
        raise DomainError(
            f"KS needs at least {MIN_KS_SAMPLES} samples, got {values.shape[0]}"
        )
    if not np.all(np.isfinite(values)):
        raise DomainError("KS samples must be finite")
    result = stats.kstest(values, "norm", method="asymp")
    return float(result.statistic), float(result.pvalue)
