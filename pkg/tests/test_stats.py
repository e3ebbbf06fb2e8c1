import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from pulsepair import stats
from pulsepair.model import db_to_linear_snr, empty_pairs

# --------------------------------------------------------------------------
# metric and ordering


def test_snr_metric_examples():
    assert stats.snr_metric(0.0, 0.0) == 0.0
    # log10(e) * 2 * (10**1.18 - 1)
    assert stats.snr_metric(11.8, 11.8) == pytest.approx(12.2780370006, abs=1e-9)
    assert stats.snr_metric(11.8, 11.8) == pytest.approx(12.279, abs=2e-3)
    with pytest.raises(ValueError):
        stats.snr_metric(-1.0, 12.0)


@given(st.floats(0, 40), st.floats(0, 40), st.floats(1e-3, 5))
def test_snr_metric_increasing(x, y, d):
    assert stats.snr_metric(x + d, y) > stats.snr_metric(x, y)
    assert stats.snr_metric(x, y + d) > stats.snr_metric(x, y)


def test_metric_order_equals_linear_sum_order():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(11.8, 30, (2, 5000))
    s = db_to_linear_snr(a) + db_to_linear_snr(b)
    np.testing.assert_array_equal(np.argsort(stats.snr_metric(a, b), kind="stable"),
                                  np.argsort(s, kind="stable"))


def ranked_pairs(metric, t=None, f=None):
    p = empty_pairs(len(metric))
    p["snr_metric"] = metric
    p["mjd_timestamp"] = 59500 + (np.arange(len(metric)) if t is None else np.asarray(t)) / 86400
    p["freq_hz"] = 1.41e9 if f is None else f
    return p


def test_sort_examples_and_tie_break():
    out = stats.sort_pairs_desc(ranked_pairs([5.0, 9.0, 7.0]))
    assert out["snr_metric"].tolist() == [9.0, 7.0, 5.0]
    tie = stats.sort_pairs_desc(ranked_pairs([3.0, 3.0, 3.0], t=[20, 10, 10], f=[1.0, 2.0, 1.0]))
    assert (tie["mjd_timestamp"] * 86400 - 59500 * 86400).round().tolist() == [10, 10, 20]
    assert tie["freq_hz"].tolist() == [1.0, 2.0, 1.0]
    with pytest.raises(ValueError):
        stats.sort_pairs_desc(empty_pairs(2))


def test_sort_permutation_invariant():
    rng = np.random.default_rng(1)
    p = ranked_pairs(rng.integers(0, 20, 500).astype(float), t=rng.integers(0, 50, 500),
                     f=rng.integers(0, 5, 500).astype(float))
    ref = stats.sort_pairs_desc(p)
    for _ in range(5):
        assert stats.sort_pairs_desc(p[rng.permutation(len(p))]).tobytes() == ref.tobytes()


def test_ra_bin_examples():
    assert stats.ra_bin(5.25) == 17
    assert stats.ra_bin(0.0) == 0
    assert stats.ra_bin(6.299) == 20
    assert stats.ra_bin(0.6) == 2
    for bad in (-0.01, 6.3, 7.0):
        with pytest.raises(ValueError):
            stats.ra_bin(bad)


# --------------------------------------------------------------------------
# binomial


def test_binomial_examples():
    assert stats.binomial_pmf(8, 8, 0.315) == pytest.approx(9.7e-5, rel=0.02)
    assert stats.binomial_pmf(8, 8, 0.315) == pytest.approx(0.315**8, rel=1e-12)
    assert stats.binomial_pmf(5, 5, 0.315) == pytest.approx(0.0031, rel=0.02)
    assert stats.binomial_pmf(0, 37, 0.2) == pytest.approx(0.8**37, rel=1e-12)
    assert stats.binomial_pmf(0, 10, 0.0) == 1.0
    assert stats.binomial_pmf(10, 10, 1.0) == 1.0
    assert stats.binomial_pmf(3, 10, 1.0) == 0.0


def test_binomial_matches_scipy_large_n():
    k = np.array([0, 10, 47_600, 50_000, 1_000_000])
    got = stats.binomial_logpmf(k, 1_000_000, 0.05)
    np.testing.assert_allclose(got, sps.binom.logpmf(k, 1_000_000, 0.05), rtol=1e-9)


@pytest.mark.parametrize("n", [1, 7, 100, 1000])
@pytest.mark.parametrize("p", [0.0, 1 / 21, 0.315, 0.9, 1.0])
def test_binomial_sums_to_one(n, p):
    assert math.fsum(stats.binomial_pmf(np.arange(n + 1), n, p)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("args", [(-1, 5, 0.5), (6, 5, 0.5), (1, 5, -0.1), (1, 5, 1.1)])
def test_binomial_domain_errors(args):
    with pytest.raises(ValueError):
        stats.binomial_pmf(*args)


# --------------------------------------------------------------------------
# RA density likelihood


def pairs_in_bins(bins):
    p = empty_pairs(len(bins))
    p["ra_hr"] = np.asarray(bins) * 0.3 + 0.15
    return p


def test_first_rank_single_trial():
    s = stats.ra_density_log_likelihood(pairs_in_bins([17]))
    assert s.log10_likelihood[0] == pytest.approx(math.log10(1 / 21), abs=1e-12)
    assert s.log10_likelihood[0] == pytest.approx(-1.322, abs=5e-4)


def test_five_of_top_ten_pattern():
    bins = [17, 17, 3, 9, 17, 17, 12, 0, 6, 17]  # ranks 1, 2, 5, 6, 10 in bin 17
    s = stats.ra_density_log_likelihood(pairs_in_bins(bins))
    exact = math.log10(math.comb(10, 5) * (1 / 21) ** 5 * (20 / 21) ** 5)
    assert s.log10_likelihood[9] == pytest.approx(exact, abs=1e-12)
    assert s.log10_likelihood[9] == pytest.approx(-4.3156424, abs=1e-6)
    assert s.cumulative_count[9] == 5
    assert s.bin_members_to_minimum(17).tolist() == [0, 1, 4, 5, 9]
    # about three decades below a single-trial, noise-like entry
    assert s.log10_likelihood[0] - s.log10_likelihood[9] == pytest.approx(3.0, abs=0.1)


def test_clamp_at_noise_expectation():
    bins = [b for b in range(21) if b != 4 for _ in range(10)] + [4, 4]  # 200 elsewhere, then bin 4
    rng = np.random.default_rng(0)
    head = rng.permutation(bins[:200]).tolist() + [0] * 9 + [4]
    s = stats.ra_density_log_likelihood(pairs_in_bins(head))
    assert s.rank[-1] == 210 and s.cumulative_count[-1] == 1
    assert s.log10_likelihood[-1] == pytest.approx(math.log10(stats.binomial_pmf(10, 210, 1 / 21)),
                                                   abs=1e-12)
    assert s.log10_likelihood[-1] > math.log10(stats.binomial_pmf(1, 210, 1 / 21))


@given(st.lists(st.integers(0, 20), min_size=1, max_size=300))
@settings(max_examples=100)
def test_likelihood_series_invariants(bins):
    s = stats.ra_density_log_likelihood(pairs_in_bins(bins))
    assert np.all(np.diff(s.rank) > 0)
    assert np.all(s.cumulative_count <= s.rank)
    assert np.all(s.log10_likelihood <= 0)
    assert np.all(s.cumulative_count >= 1)


def test_pure_noise_likelihood_calibration():
    # stage-3 noise lists: Poisson-many pairs with RA uniform over the session
    mins = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = max(1, rng.poisson(69))
        p = empty_pairs(n)
        p["ra_hr"] = rng.uniform(0, 6.3, n)
        mins.append(stats.ra_density_log_likelihood(p).minimum())
    mins = np.array(mins)
    assert np.median(mins) >= -3.0
    assert np.mean(mins < -5) <= 0.02


# --------------------------------------------------------------------------
# multiplier analysis


def _uniform_event_probability(base, lo, hi, w):
    # measure of |df| in [lo, hi] within w of some k*base, k >= 1
    total = 0.0
    for k in range(1, int(hi / base) + 2):
        total += max(0.0, min(hi, k * base + w) - max(lo, k * base - w))
    return total / (hi - lo)


def test_mc_multiplier_matches_published_values():
    r = stats.mc_multiplier_event_probability(58.575, seed=0)
    assert r.n_trials == 1000
    assert r.event_probability == pytest.approx(0.259, abs=0.035)
    assert r.sigma_residuals_hz == pytest.approx(8.43, abs=1.0)
    assert r.standard_error == pytest.approx(math.sqrt(r.event_probability * (1 - r.event_probability) / 1000))


def test_mc_multiplier_converges():
    exact = _uniform_event_probability(58.575, 80, 400, 8.43)
    assert exact == pytest.approx(0.26344, abs=1e-4)
    r = stats.mc_multiplier_event_probability(58.575, n_trials=100_000, seed=1)
    assert abs(r.event_probability - exact) < 3 * math.sqrt(exact * (1 - exact) / 1e5)
    # std of |residual| for uniform |df|, by dense midpoint quadrature
    grid = 80 + (np.arange(3_200_000) + 0.5) * 1e-4
    sigma = np.abs(stats.multiplier_residuals(grid, 58.575)).std()
    assert sigma == pytest.approx(8.4511, abs=1e-3)
    assert r.sigma_residuals_hz == pytest.approx(sigma, abs=0.05)


def test_mc_multiplier_full_window_and_errors():
    assert stats.mc_multiplier_event_probability(58.575, sigma_res_hz=58.575 / 2).event_probability == 1.0
    with pytest.raises(ValueError):
        stats.mc_multiplier_event_probability(0.0)
    with pytest.raises(ValueError):
        stats.mc_multiplier_event_probability(58.575, df_range_hz=(400, 80))
    with pytest.raises(ValueError):
        stats.mc_multiplier_event_probability(58.575, sigma_res_hz=40.0)


def test_residual_to_nearest_nonzero_multiple():
    res = stats.multiplier_residuals([234.3, -234.3, 240.0, 10.0, -351.45 - 3], 58.575)
    np.testing.assert_allclose(res, [0.0, 0.0, 5.7, -48.575, -3.0], atol=1e-9)
    assert np.all(np.abs(stats.multiplier_residuals(np.linspace(30, 5000, 999), 58.575)) <= 58.575 / 2 + 1e-9)


def test_repetition_eight_pairs():
    base = 58.575
    df = [k * base + r for k, r in zip([2, 3, 4, -5, 6, -2, 3, 4], [10.25, -3, 1, 2, -5, 0, 4, -10.25])]
    m = stats.repetition_likelihood(df, base)
    assert m.event_probability == pytest.approx(1.8 * 10.25 / base, rel=1e-12)
    assert m.event_probability == pytest.approx(0.315, abs=5e-4)
    assert m.raw_likelihood == pytest.approx(9.7e-5, rel=0.02)
    assert m.multiplier_freedom_N == 16
    assert m.corrected_likelihood == pytest.approx(0.0015, rel=0.05)
    assert m.k_events == m.n_trials == 8
    assert set(m.to_json()) >= {"base_hz", "residuals_hz", "sigma_residuals_hz", "event_probability",
                                "k_events", "n_trials", "raw_likelihood", "multiplier_freedom_N",
                                "corrected_likelihood"}


def test_repetition_five_pairs():
    base = 58.575
    m = stats.repetition_likelihood([2 * base + 10.25, 3 * base, 4 * base - 5, 5 * base, 6 * base], base)
    assert m.raw_likelihood == pytest.approx(0.0031, rel=0.02)
    assert m.corrected_likelihood == pytest.approx(0.05, rel=0.02)


def test_repetition_degenerate_floor():
    m = stats.repetition_likelihood([4 * 58.575], 58.575)
    assert m.event_probability == pytest.approx(1.8 * (3.725 / 2) / 58.575)
    with pytest.raises(ValueError):
        stats.repetition_likelihood([], 58.575)


@given(st.lists(st.floats(80, 400), min_size=1, max_size=20), st.randoms())
def test_repetition_permutation_invariant(df, rnd):
    shuffled = list(df)
    rnd.shuffle(shuffled)
    a = stats.repetition_likelihood(df, 58.575)
    b = stats.repetition_likelihood(shuffled, 58.575)
    assert a.to_json() == b.to_json()
    assert 0 <= a.raw_likelihood <= 1 and 0 <= a.corrected_likelihood <= 1
    assert max(abs(r) for r in a.residuals_hz) <= 58.575 / 2 + 1e-9


def test_noise_adjusted_drops_worst_residuals():
    base = 58.575
    df = [2 * base + 1, 3 * base - 2, 4 * base + 25, 5 * base + 3]
    m = stats.noise_adjusted_repetition(df, last_rank=21, base_hz=base)
    assert m.n_trials == 3
    assert m.sigma_residuals_hz == pytest.approx(3.0, abs=1e-9)


def test_trials_correction_examples():
    assert stats.trials_correction(9.7e-5, 6) == pytest.approx(5.8e-4, rel=0.01)
    assert stats.trials_correction(0.5, 1) == 0.5
    assert stats.trials_correction(0.3, 10) == 1.0
    with pytest.raises(ValueError):
        stats.trials_correction(0.1, 0.5)


def test_half_range_concentration():
    df = np.linspace(205, 355, 11)
    assert stats.half_range_concentration(df, 80, 400, 200, 360) == pytest.approx(2 * 2**-11)
    assert stats.half_range_concentration(df, 80, 400, 200, 360) == pytest.approx(9.8e-4, abs=1e-5)
    assert stats.half_range_concentration([250.0], 80, 400, 200, 360) == 1.0
    assert stats.half_range_concentration(list(df) + [100.0], 80, 400, 200, 360) == 1.0
    assert stats.half_range_concentration(-df, 80, 400, 200, 360) == pytest.approx(2 * 2**-11)
    with pytest.raises(ValueError):
        stats.half_range_concentration(df, 80, 400, 200, 350)


def test_bootstrap_bin_tail():
    rng = np.random.default_rng(3)
    counts = rng.poisson(0.01, (2000, 21))
    est = stats.bootstrap_bin_count_tail(counts, window_days=65, min_count=8, n_boot=500)
    # 65 days x 0.01 per bin: Poisson(0.65) tail at 8 is ~1e-7 per bin
    assert est.any_bin == 0.0 and est.named_bin == 0.0
    counts = rng.poisson(0.1, (2000, 21))
    est = stats.bootstrap_bin_count_tail(counts, window_days=65, min_count=8, n_boot=2000)
    p_bin = sps.poisson(6.5).sf(7)
    assert est.named_bin == pytest.approx(p_bin, abs=4 * math.sqrt(p_bin / 2000) + 0.01)
    assert est.any_bin == pytest.approx(1 - (1 - p_bin) ** 21, abs=0.05)
