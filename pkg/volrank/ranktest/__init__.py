"""Maximal-rank and constant-rank tests."""
from volrank.ranktest.blocks import (
    perturb_and_block,
    s_statistics,
    simulate_wprime,
    variance_estimators,
)
from volrank.ranktest.constrank import (
    auto_kn,
    const_rank_statistics,
    default_kn,
    spot_rank_series,
    test_const_rank,
)
from volrank.ranktest.maxrank import (
    feasible_variance,
    parse_hypothesis,
    rank_estimate,
    rank_test_report,
    test_max_rank,
    v_prime,
)
from volrank.ranktest.pipeline import PathAnalysis, analyze_path
from volrank.ranktest.quantile import norm_ppf, z_one_sided, z_two_sided
