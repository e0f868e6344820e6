from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobiflow.errors import InsufficientOverlapError, UndefinedCorrelationError
from mobiflow.ingest import DAILY, WEEKLY, TimeSeries
from mobiflow.lagcorr import best_lag, best_lags, lag_summary, peak_offset, pearson
from mobiflow.synth import gen_lagged_pair

from oracles import hand_pearson, weekly_dates

PANEL_CLUSTERS = [1, 1, 2, 5, 6, 8, 7, 6, 5, 5, 4]
PANEL_TRENDS = [16, 31, 73, 100, 74, 59, 57, 43, 34, 20, 18]


def daily(values, start=date(2020, 1, 13), region="X"):
    return TimeSeries(region, DAILY, [start + timedelta(days=i) for i in range(len(values))], values)


class TestPearson:
    def test_self(self):
        assert pearson([1, 2, 3], [1, 2, 3]) == 1.0

    def test_negated(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == -1.0

    def test_hand_formula(self):
        expected = hand_pearson([1, 2, 4], [2, 2, 5])
        assert expected == pytest.approx(5 / np.sqrt(28), abs=1e-15)
        assert pearson([1, 2, 4], [2, 2, 5]) == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            pearson([1, 2, 3], [1, 2])

    def test_constant(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([1, 1, 1], [1, 2, 3])

    @settings(max_examples=60)
    @given(
        st.lists(st.floats(-100, 100), min_size=3, max_size=30),
        st.floats(0.1, 10),
        st.floats(-50, 50),
        st.integers(0, 2**31),
    )
    def test_symmetry_affine_negation(self, xs, scale, shift, seed):
        x = np.asarray(xs)
        y = np.random.default_rng(seed).normal(size=x.size)
        if np.ptp(x) < 1e-3:
            return
        r = pearson(x, y)
        assert pearson(y, x) == pytest.approx(r, abs=1e-12)
        assert pearson(scale * x + shift, y) == pytest.approx(r, abs=1e-12)
        assert pearson(-x, y) == pytest.approx(-r, abs=1e-12)
        assert -1.0 <= r <= 1.0


class TestBestLag:
    def test_identity(self):
        pair = gen_lagged_pair(120, 0, 0.0, seed=5)
        res = best_lag(pair.awareness, pair.awareness, 30)
        assert (res.best_shift, res.r_at_best) == (0, 1.0)

    def test_planted_noiseless(self):
        pair = gen_lagged_pair(190, 14, 0.0, seed=11)
        res = best_lag(pair.mobility, pair.awareness, 30)
        assert res.best_shift == 14
        assert res.r_at_best == -1.0

    def test_profile_shape(self):
        pair = gen_lagged_pair(190, 9, 0.05, seed=3)
        res = best_lag(pair.mobility, pair.awareness, 25)
        assert [d for d, _ in res.profile] == list(range(26))
        assert all(abs(res.r_at_best) >= abs(r) for _, r in res.profile)
        assert all(n >= 3 for n in res.overlaps)

    def test_planted_noisy_within_one_day(self):
        hits = 0
        for seed in range(100):
            clean = gen_lagged_pair(190, 14, 0.0, seed)
            sigma = 0.1 * clean.awareness.values.std()
            pair = gen_lagged_pair(190, 14, sigma, seed)
            hits += best_lag(pair.mobility, pair.awareness, 30).best_shift in (13, 14, 15)
        assert hits >= 95

    def test_ties_go_to_smaller_shift(self):
        # period-2 signal: every even shift correlates perfectly
        s = daily([0.0, 1.0] * 20)
        res = best_lag(s, s, 6)
        assert res.best_shift == 0
        assert [abs(r) for _, r in res.profile] == pytest.approx([1.0] * 7)

    def test_insufficient_overlap(self):
        a = daily(np.arange(10.0) ** 2)
        with pytest.raises(InsufficientOverlapError):
            best_lag(a, a, 8)

    def test_constant_window_names_shift(self):
        m = daily([5.0] * 30)
        a = daily(np.arange(30.0))
        with pytest.raises(UndefinedCorrelationError) as err:
            best_lag(m, a, 3)
        assert err.value.shift == 0

    def test_rejects_weekly(self):
        w = TimeSeries("X", WEEKLY, weekly_dates(date(2020, 3, 2), 5), [1, 2, 3, 4, 5])
        with pytest.raises(ValueError, match="daily"):
            best_lag(w, w, 1)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31), st.integers(0, 20))
    def test_self_lag_is_zero(self, seed, max_shift):
        s = gen_lagged_pair(80, 0, 0.0, seed).awareness
        res = best_lag(s, s, max_shift)
        assert res.best_shift == 0 and res.r_at_best == pytest.approx(1.0, abs=1e-12)

    def test_parallel_matches_sequential(self):
        pairs = {}
        for i, lag in enumerate([11, 12, 13, 14, 15]):
            p = gen_lagged_pair(190, lag, 0.02, seed=i)
            pairs[f"R{i}"] = (p.mobility, p.awareness)
        seq = best_lags(pairs, 30, workers=1)
        par = best_lags(pairs, 30, workers=4)
        assert seq == par
        assert lag_summary(seq.values())["mean_delay"] == pytest.approx(13.0)


class TestPeakOffset:
    def test_panel_offset(self):
        assert peak_offset(PANEL_CLUSTERS, PANEL_TRENDS) == 2

    def test_panel_series(self):
        dates = weekly_dates(date(2020, 3, 2), 11)
        a = TimeSeries("clusters", WEEKLY, dates, PANEL_CLUSTERS)
        b = TimeSeries("Nationwide", WEEKLY, dates, PANEL_TRENDS)
        assert peak_offset(a, b) == 2

    def test_identical(self):
        assert peak_offset(PANEL_TRENDS, PANEL_TRENDS) == 0

    def test_sign(self):
        assert peak_offset([0, 5, 1, 0], [0, 1, 5, 0]) == -1

    def test_ties_take_earliest(self):
        assert peak_offset([3, 3, 1], [1, 3, 3]) == -1

    def test_empty(self):
        with pytest.raises(ValueError):
            peak_offset([], [1])
