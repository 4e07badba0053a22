import dataclasses
import math

import numpy as np
import pytest
from testfixtures import LogCapture

from volrank.models import DomainError
from volrank.ranktest import (
    auto_kn,
    const_rank_statistics,
    default_kn,
    spot_rank_series,
    test_const_rank,
    test_max_rank,
)
from volrank.ranktest.blocks import s_statistics
from volrank.ranktest.constrank import CONST_RANK_NULL, window_count
from tests import constant_blocks


def test_default_kn():
    assert default_kn(1 / 20000, 2) == 2760
    assert default_kn(0.01, 2) == 40
    assert default_kn(1e-5, 1) == 10000
    assert default_kn(0.5, 4) == 16
    with pytest.raises(DomainError):
        default_kn(1.0, 2)


def test_spot_rank_series():
    blocks = constant_blocks(2, 50, 0.001, f1=1.0, f2=2.0)
    spot = spot_rank_series(blocks, 8)
    assert spot.values.shape == (43,)
    assert np.allclose(spot.values, 1.0)
    assert spot.times()[1] == pytest.approx(0.004)
    assert spot.median() == pytest.approx(1.0)
    assert spot.n_invalid == 0


def test_spot_rank_series_bounds():
    blocks = constant_blocks(2, 50, 0.001)
    with pytest.raises(DomainError):
        spot_rank_series(blocks, 7)
    with pytest.raises(DomainError):
        spot_rank_series(blocks, 51)


def test_spot_rank_series_invalid_windows():
    blocks = constant_blocks(1, 20, 0.01, f1=[0.0] * 5 + [1.0] * 15, f2=[0.0] * 5 + [1.0] * 15)
    with LogCapture() as l:
        spot = spot_rank_series(blocks, 4)
        l.check_present(("ranktest", "WARNING", "2 spot windows have a vanishing statistic"))
    assert spot.n_invalid == 2
    assert np.isnan(spot.values[0]) and np.isnan(spot.values[1])
    assert spot.median() == pytest.approx(1.0)

    s1, _ = s_statistics(blocks)
    with LogCapture() as l:
        report = const_rank_statistics(blocks, spot, 1.0, 1.0, s1)
        l.check_present(
            ("ranktest", "WARNING", "2 variance summands skipped on vanishing S1 windows")
        )
    assert report.n_vbar_skipped == 2
    assert report.n_spot_invalid == 2


def test_constant_statistics_vanish():
    blocks = constant_blocks(1, 100, 0.01)
    spot = spot_rank_series(blocks, 10)
    s1, _ = s_statistics(blocks)
    report = const_rank_statistics(blocks, spot, 1.0, 1.0, s1)
    assert report.n_windows == 9
    assert report.a_p == pytest.approx(1.8)
    assert report.a_n_t == pytest.approx(1.8)
    assert report.b_stat == pytest.approx(0.0, abs=1e-12)
    assert report.vbar == pytest.approx(0.0, abs=1e-12)
    assert report.z_stat == pytest.approx(0.0, abs=1e-9)
    assert not test_const_rank(report, 0.05).reject


def test_spot_values_capped():
    blocks = constant_blocks(1, 100, 0.01, f1=1.0, f2=2.0**-5)
    spot = spot_rank_series(blocks, 10)
    assert np.allclose(spot.values, 6.0)
    s1, _ = s_statistics(blocks)
    report = const_rank_statistics(blocks, spot, 1.0, 6.0, s1)
    assert report.a_p == pytest.approx(0.2 * 9 * 2.0)  # capped at d + 1


def test_no_complete_windows():
    blocks = constant_blocks(1, 100, 0.01)
    spot = spot_rank_series(blocks, 100)
    s1, _ = s_statistics(blocks)
    with pytest.raises(DomainError, match="cannot reject"):
        const_rank_statistics(blocks, spot, 1.0, 1.0, s1)


def test_window_count():
    assert window_count(1.0, 100, 1 / 5000) == 49
    assert window_count(1.0, 2760, 1 / 5000) == 0
    assert window_count(0.3, 1, 0.1) == 2


def test_auto_kn():
    # 5000 blocks at delta_n = 1/20000, where default_kn gives 2760
    assert auto_kn(constant_blocks(2, 5000, 1 / 20000)) == 100
    assert auto_kn(constant_blocks(2, 100, 0.01)) == 8
    assert auto_kn(constant_blocks(1, 100000, 1e-6)) == 2000


def test_const_rank_invalid_arguments():
    blocks = constant_blocks(1, 100, 0.01)
    spot = spot_rank_series(blocks, 10)
    with pytest.raises(DomainError):
        const_rank_statistics(blocks, spot, 0.0, 1.0, 1.0)
    report = const_rank_statistics(blocks, spot, 1.0, 1.0, 2.0)
    with pytest.raises(DomainError):
        test_const_rank(report, 0.05, test_max_rank(1.0, 1.0, 0.01, 1, 1, 0.05))


def test_const_rank_decision():
    blocks = constant_blocks(1, 100, 0.01)
    base = const_rank_statistics(blocks, spot_rank_series(blocks, 10), 1.0, 1.0, 2.0)

    # threshold -z' sqrt(delta_n Vbar) = -0.1645 for Vbar = 1
    report = dataclasses.replace(base, b_stat=-0.3, vbar=1.0)
    decision = test_const_rank(report, 0.05)
    assert decision.reject
    assert decision.null == CONST_RANK_NULL
    assert decision.combined_reject is None

    # Vbar is capped at delta_n^(-1/2) = 10
    capped = dataclasses.replace(base, b_stat=-0.3, vbar=1e6)
    assert not test_const_rank(capped, 0.05).reject
    assert test_const_rank(dataclasses.replace(capped, b_stat=-0.6), 0.05).reject


def test_double_test():
    blocks = constant_blocks(1, 100, 0.01)
    base = const_rank_statistics(blocks, spot_rank_series(blocks, 10), 1.0, 1.0, 2.0)
    report = dataclasses.replace(base, b_stat=-0.3, vbar=1.0)

    positive = test_max_rank(1.0, 1.0, 0.01, 1, 0, 0.05, "leq")
    assert positive.reject
    decision = test_const_rank(report, 0.05, positive)
    assert decision.zero_rank_reject
    assert decision.combined_reject

    null_rank = test_max_rank(0.1, 1.0, 0.01, 1, 0, 0.05, "leq")
    decision = test_const_rank(report, 0.05, null_rank)
    assert decision.reject
    assert not decision.combined_reject


def test_z_statistic_sign():
    blocks = constant_blocks(1, 100, 0.01)
    report = const_rank_statistics(blocks, spot_rank_series(blocks, 10), 1.0, 0.5, 2.0)
    # R_hat below the spot values makes B positive
    assert report.b_stat > 0
    assert report.z_stat > 0 or math.isinf(report.z_stat)
