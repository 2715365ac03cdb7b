import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from edgeslice.radio import achievable_rate, link_states, pathloss_db, sinr
from edgeslice.scenario import RadioParams, make_scenario


def test_pathloss_reference_distance():
    assert pathloss_db(1.0) == 38.0


def test_pathloss_ten_metres():
    assert pathloss_db(10.0) == pytest.approx(68.0, abs=1e-12)


def test_pathloss_clamped_below_one_metre():
    assert pathloss_db(0.5) == pathloss_db(1.0)
    assert pathloss_db(0.0) == 38.0


@given(st.floats(0, 1e4), st.floats(0, 1e4))
def test_pathloss_monotone(a, b):
    lo, hi = sorted((a, b))
    assert pathloss_db(lo) <= pathloss_db(hi)


def test_sinr_equals_one_when_rx_equals_noise():
    # 23 dBm - 136.8 dB = -113.8 dBm = noise
    assert sinr(23.0, 136.8, -113.8, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_sinr_vanishes_under_infinite_interference():
    assert sinr(23.0, 68.0, -101.0, math.inf) == 0.0
    assert sinr(23.0, 68.0, -101.0, 1e30) < 1e-20


def test_sinr_db_arithmetic():
    # 23 - 68 - (-101) = 56 dB
    assert sinr(23.0, 68.0, -101.0, 0.0) == pytest.approx(10 ** 5.6, rel=1e-12)
    rx_mw = 10 ** ((23.0 - 68.0) / 10)
    noise_mw = 10 ** (-101.0 / 10)
    assert sinr(23.0, 68.0, -101.0) == pytest.approx(rx_mw / noise_mw, rel=1e-12)


def test_rate_zero_sinr():
    assert achievable_rate(0.0, 5, 200e3) == 0.0


def test_rate_zero_rbgs():
    assert achievable_rate(100.0, 0, 200e3) == 0.0


def test_rate_one_rbg_sinr_three():
    assert achievable_rate(3.0, 1, 200e3) == pytest.approx(400e3, rel=1e-12)


def test_rate_five_rbgs_sinr_one():
    assert achievable_rate(1.0, 5, 200e3) == pytest.approx(1e6, rel=1e-12)


def test_negative_rbgs_rejected():
    with pytest.raises(ValueError):
        achievable_rate(1.0, -1, 200e3)


@given(st.floats(0, 1e6), st.floats(0, 1e6), st.integers(0, 50), st.integers(0, 50))
def test_rate_monotone_in_sinr_and_rbgs(s1, s2, n1, n2):
    lo_s, hi_s = sorted((s1, s2))
    lo_n, hi_n = sorted((n1, n2))
    assert achievable_rate(lo_s, lo_n, 200e3) <= achievable_rate(hi_s, lo_n, 200e3)
    assert achievable_rate(lo_s, lo_n, 200e3) <= achievable_rate(lo_s, hi_n, 200e3)


@given(st.floats(0, 1e6), st.integers(0, 25))
def test_doubling_rbgs_doubles_rate(s, n):
    assert achievable_rate(s, 2 * n, 200e3) == pytest.approx(2 * achievable_rate(s, n, 200e3),
                                                             rel=1e-12)


def test_link_states_full_reuse_interference():
    sc = make_scenario(2, seed=0, bs_positions=[(0.0, 0.0), (100.0, 0.0)])
    pos = np.array([[10.0, 0.0]])
    ls = link_states(pos, sc.base_stations, RadioParams())
    p0 = 10 ** ((23 - pathloss_db(10.0)) / 10)
    p1 = 10 ** ((23 - pathloss_db(90.0)) / 10)
    noise = 10 ** (-113.8 / 10)
    assert ls.sinr_linear[0, 0] == pytest.approx(p0 / (noise + p1), rel=1e-12)
    assert ls.sinr_linear[0, 1] == pytest.approx(p1 / (noise + p0), rel=1e-12)
