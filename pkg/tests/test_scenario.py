import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from pulsepair import scenario as sc
from pulsepair.model import TIME_GRID_S, Pol, on_time_grid, threshold_linear_snr
from pulsepair.pairsearch import CoarseWindow, search_pairs


def test_mjd_to_ra_longitude_offset():
    for mjd in (59440.1, 59500.73, 51544.5):
        a = sc.mjd_to_ra(mjd, 0.0)
        b = sc.mjd_to_ra(mjd, 15.0)
        assert (b - a) % 24.0 == pytest.approx(1.0, abs=1e-9)


def test_mjd_to_ra_sidereal_periodicity():
    mjd = 59501.2
    assert sc.mjd_to_ra(mjd + sc.SIDEREAL_DAY_DAYS) == pytest.approx(sc.mjd_to_ra(mjd), abs=1e-6)


def test_gmst_at_j2000():
    assert sc.mjd_to_ra(51544.5, 0.0) == pytest.approx(18.697374558, abs=1e-9)


def test_beam_width_in_ra():
    assert sc.beam_fwhm_ra_hr(-7.6) == pytest.approx(0.1345, abs=5e-4)


def test_session_geometry():
    for day in (59440, 59505, 59582):
        s = sc.session_for_day(day)
        ra = sc.mjd_to_ra(day + s.times() / 86400.0)
        assert 0.0 <= ra[0] < 1e-3
        assert ra[-1] < 6.3
        assert sc.mjd_to_ra(day + (s.times()[-1] + TIME_GRID_S) / 86400.0) >= 6.3 - 1e-6
        assert np.all(on_time_grid(s.times()))


def _short(seed, **kw):
    base = dict(n_days=1, noise_detection_rate=10.0, session_hours=0.05, seed=seed)
    base.update(kw)
    return sc.Scenario(**base)


def test_noise_count_poisson_calibration():
    counts, means = [], []
    for seed in range(30):
        s = _short(seed)
        sess = sc.scenario_sessions(s)[0]
        det = sc.day_detections(s, sess)
        counts.append(len(det[Pol.LHC]))
        means.append(s.noise_detection_rate * sess.duration_s)
    mu = means[0]
    se = math.sqrt(mu / len(counts))
    assert abs(np.mean(counts) - mu) < 3 * se


def _band_cdf(f, intervals):
    widths = np.array([b - a for a, b in intervals])
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    out = np.zeros_like(f)
    for k, (a, b) in enumerate(intervals):
        inside = (f >= a) & (f <= b)
        out[inside] = (edges[k] + f[inside] - a) / edges[-1]
        out[f > b] = edges[k + 1] / edges[-1]
    return out


def test_noise_frequencies_uniform_over_unexcised_band():
    passes = 0
    for seed in range(100):
        s = _short(seed, session_hours=0.02)
        det = sc.day_detections(s, sc.scenario_sessions(s)[0])[Pol.RHC]
        intervals = s.band_intervals()
        assert not np.any((det["freq_hz"] >= 1422e6) & (det["freq_hz"] <= 1428e6))
        p = stats.kstest(det["freq_hz"], lambda f: _band_cdf(np.asarray(f), intervals)).pvalue
        passes += p > 0.01
    assert passes >= 95


def test_noise_snr_is_shifted_exponential():
    passes = 0
    s_min = threshold_linear_snr()
    for seed in range(100):
        s = _short(seed, session_hours=0.02)
        det = sc.day_detections(s, sc.scenario_sessions(s)[0])[Pol.LHC]
        lin = 10 ** (det["snr_db"] / 10) - 1
        passes += stats.kstest(lin - s_min, "expon").pvalue > 0.01
    assert passes >= 95


def test_injection_pairs_inside_beam():
    inj = sc.Injection(ra_hr=5.25, dt_s=-3.75, df_base_hz=58.575, df_jitter_hz=8.0)
    s = sc.Scenario(n_days=143, noise_detection_rate=0.0, injections=(inj,))
    w = sc.BEAM_TRUNCATION_FWHM * sc.beam_fwhm_ra_hr(inj.dec_deg)
    ras, n = [], 0
    for day, det in sc.iter_day_detections(s):
        lhc, rhc = det[Pol.LHC], det[Pol.RHC]
        assert len(lhc) == len(rhc) == 1
        assert lhc["t_s"][0] - rhc["t_s"][0] == -3.75
        t_early = min(lhc["t_s"][0], rhc["t_s"][0])
        ras.append(sc.mjd_to_ra(day + t_early / 86400.0))
        n += 1
    ras = np.array(ras)
    assert n == 143
    # RA is that of the grid-rounded pulse time, so allow one slot of slack
    slack = TIME_GRID_S * sc.SIDEREAL_RATE / 3600.0
    assert np.all(np.abs(ras - 5.25) <= w + slack)
    # beam thinning concentrates pulses near the beam centre
    assert np.mean(np.abs(ras - 5.25) < sc.beam_fwhm_ra_hr(-7.6) / 2) > 0.6


def test_injection_df_on_multiples():
    inj = sc.Injection(ra_hr=3.0, dt_s=-6.25, df_base_hz=58.575, df_jitter_hz=0.0,
                       pulses_per_transit=5)
    assert inj.admissible_multiples() == [2, 3, 4, 5, 6]
    s = sc.Scenario(n_days=20, noise_detection_rate=0.0, injections=(inj,))
    ks = []
    for _, det in sc.iter_day_detections(s):
        pairs = search_pairs(det[Pol.LHC], det[Pol.RHC])
        pairs = pairs[pairs["dt_s"] == -6.25]
        k = np.abs(pairs["df_hz"]) / 58.575
        # exact multiples up to the mHz frequency quantization
        matched = np.abs(k - np.round(k)) * 58.575 <= 2e-3
        assert matched.sum() >= 5
        ks += np.round(k[matched]).astype(int).tolist()
    assert set(ks) <= {2, 3, 4, 5, 6}
    assert len(set(ks)) == 5


def test_noise_identical_with_and_without_injections():
    base = _short(3)
    inj = sc.Injection(ra_hr=0.02, dt_s=1.0, pulses_per_transit=2)
    with_inj = replace(base, injections=(inj,))
    sess = sc.scenario_sessions(base)[0]
    a = sc.day_detections(base, sess)[Pol.LHC]
    b = sc.day_detections(with_inj, sess)[Pol.LHC]
    assert len(b) == len(a) + 2
    assert np.isin(a, b).all()


def test_day_generation_order_independent():
    s = replace(_short(5), n_days=4)
    all_days = dict(sc.iter_day_detections(s))
    for sess in reversed(sc.scenario_sessions(s)):
        one = sc.day_detections(s, sess)
        np.testing.assert_array_equal(one[Pol.RHC], all_days[sess.mjd_day][Pol.RHC])


def test_generation_deterministic(tmp_path):
    s = replace(_short(9), n_days=2)
    p1 = sc.generate_detections(s, tmp_path / "a")
    p2 = sc.generate_detections(s, tmp_path / "b")
    assert [p.read_bytes() for p in p1] == [p.read_bytes() for p in p2]


def test_stage1_file_round_trip(tmp_path):
    s = _short(2)
    det = sc.day_detections(s, sc.scenario_sessions(s)[0])[Pol.LHC]
    path = tmp_path / sc.detection_filename(1234, Pol.LHC)
    sc.write_detections(path, det)
    assert path.name == "det_1234_LHC.csv"
    assert path.read_text().splitlines()[0] == "pol,mjd_day,t_s,freq_hz,snr_db"
    back = sc.read_detections(path)
    np.testing.assert_array_equal(back, det)


def test_stage1_rejects_bad_header(tmp_path):
    path = tmp_path / "det_1_LHC.csv"
    path.write_text("a,b\n")
    with pytest.raises(ValueError):
        sc.read_detections(path)


def test_scenario_validation():
    with pytest.raises(ValueError):
        sc.Scenario(n_days=1, noise_detection_rate=-1.0)
    with pytest.raises(ValueError):
        sc.Injection(ra_hr=24.5, dt_s=0.0)
    with pytest.raises(ValueError):
        sc.Injection(ra_hr=1.0, dt_s=0.3)
    with pytest.raises(ValueError):
        sc.Scenario(n_days=1, noise_detection_rate=1.0,
                    rfi=(sc.NarrowbandRfiEvent(1.0e9, 0, 1),))


def test_df_window_probability_single_interval():
    # |f1 - f2| <= w for f1, f2 ~ U(0, B): 1 - (1 - w/B)^2
    B = 50e6
    for lo, hi in ((0.0, 2000.0), (80.0, 400.0), (0.0, 10e6)):
        want = (1 - (1 - hi / B) ** 2) - (1 - (1 - lo / B) ** 2)
        got = sc.df_window_probability([(0.0, B)], lo, hi)
        assert got == pytest.approx(want, rel=1e-12)


def test_df_window_probability_union_monte_carlo():
    intervals = [(0.0, 3.0), (5.0, 6.0)]
    rng = np.random.default_rng(0)
    f = sc.sample_uniform_intervals(rng, intervals, 2_000_000).reshape(2, -1)
    d = np.abs(f[0] - f[1])
    mc = np.mean((d >= 0.5) & (d <= 2.5))
    assert sc.df_window_probability(intervals, 0.5, 2.5) == pytest.approx(mc, abs=2e-3)


def test_expected_pair_count_large_window_limit():
    # wide grid and narrow df window reduce to r_L r_R T (2 W_t)(2 W_f / B)
    r, T, B = 3.0, 20000.0, 44e6
    n_slots = int(T / TIME_GRID_S)
    m = 12
    dts = [k * TIME_GRID_S for k in range(-m, m)]  # 24 values -> 2 W_t = 6 s
    got = sc.expected_pair_count(r, r, [n_slots], dts, 0.0, 2000.0, [(0.0, B)])
    approx = r * r * T * 6.0 * (2 * 2000.0 / B)
    assert got == pytest.approx(approx, rel=2e-3)


def test_tuned_rate_hits_flux_anchor():
    s = sc.noise_scenario(seed=0, n_days=143)
    slots = [x.n_slots for x in sc.scenario_sessions(s)]
    n = sc.expected_pair_count(s.noise_detection_rate, s.noise_detection_rate, slots, [-3.75],
                               80.0, 400.0, s.band_intervals())
    assert n / 21 / 143 * 65 == pytest.approx(1.5, rel=1e-9)
    assert s.noise_detection_rate == pytest.approx(2.43, abs=0.02)


def test_stage2_count_matches_coincidence_oracle():
    s = sc.Scenario(n_days=12, noise_detection_rate=2.4, seed=11)
    got = 0
    slots = []
    for sess in sc.scenario_sessions(s):
        det = sc.day_detections(s, sess)
        got += len(search_pairs(det[Pol.LHC], det[Pol.RHC], CoarseWindow()))
        slots.append(sess.n_slots)
    dts = [k * TIME_GRID_S for k in range(-39, 40)]
    want = sc.expected_pair_count(2.4, 2.4, slots, dts, 0.0, 2000.0, s.band_intervals())
    assert abs(got - want) < 3 * math.sqrt(want)


def test_burst_event_cluster():
    s = sc.Scenario(n_days=1, noise_detection_rate=0.0)
    sess = sc.scenario_sessions(s)[0]
    mjd = sess.mjd_day + (sess.t0_s + 1000.0) / 86400.0
    ev = sc.EnergyBurstEvent(mjd_timestamp=mjd, duration_s=20.0, n_pairs=15, snr_db=12.0)
    det = sc.day_detections(replace(s, bursts=(ev,)), sess)
    assert len(det[Pol.LHC]) == len(det[Pol.RHC]) == 15
    t = det[Pol.LHC]["t_s"]
    assert t.max() - t.min() <= 21.0
    assert np.all(np.abs(det[Pol.LHC]["snr_db"] - 12.0) < 1e-9)


def test_rfi_event_repeats_in_one_channel():
    s = sc.Scenario(n_days=1, noise_detection_rate=0.0)
    sess = sc.scenario_sessions(s)[0]
    start = sess.mjd_day + (sess.t0_s + 100.0) / 86400.0
    ev = sc.NarrowbandRfiEvent(1440e6, start, start + 10.0 / 86400.0, pols=("LHC",))
    det = sc.day_detections(replace(s, rfi=(ev,)), sess)
    assert len(det[Pol.RHC]) == 0
    assert len(det[Pol.LHC]) == 40
    assert np.all(det[Pol.LHC]["freq_hz"] == 1440e6)


def test_presets():
    inj = sc.injection_scenario(seed=1, n_days=143)
    assert inj.injections[0].active_mjd_days == sc.FIG4_DAYS
    paper = sc.paper_like_scenario(seed=1, n_days=143)
    assert len(paper.bursts) == 10 and len(paper.rfi) == 2
    assert len(paper.injections[1].active_mjd_days) == 11
    assert set(sc.SCENARIO_PRESETS) == {"noise", "injection", "paper"}
