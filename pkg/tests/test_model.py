import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from pulsepair import model
from pulsepair.model import (
    Pol,
    ToneModel,
    db_to_linear_snr,
    joint_polarized_log10_pdf,
    linear_snr_to_db,
    rician_log_pdf,
)


def test_db_to_linear_examples():
    assert db_to_linear_snr(0.0) == 0.0
    assert db_to_linear_snr(3.0103) == pytest.approx(1.0, abs=1e-4)
    # independent evaluation 10**1.18 - 1 (quoted elsewhere to 4 digits as 14.1367)
    assert db_to_linear_snr(11.8) == pytest.approx(14.135612484362, rel=1e-12)
    assert db_to_linear_snr(11.8) == pytest.approx(14.1367, abs=2e-3)
    assert db_to_linear_snr(-3.0) < 0


@given(st.floats(min_value=-10, max_value=80))
def test_db_round_trip(x):
    assert linear_snr_to_db(db_to_linear_snr(x)) == pytest.approx(x, abs=1e-12)


def test_db_to_linear_strictly_increasing():
    x = np.linspace(-5, 60, 10001)
    assert np.all(np.diff(db_to_linear_snr(x)) > 0)


def test_rician_examples():
    assert rician_log_pdf(1.0, 0.0, 1.0) == pytest.approx(-0.5, abs=1e-15)
    assert rician_log_pdf(0.0, 0.0, 1.0) == -math.inf
    assert rician_log_pdf(3.0, 3.0, 1.0) == pytest.approx(stats.rice(3.0).logpdf(3.0), abs=1e-9)


def test_rician_negative_amplitude_rejected():
    with pytest.raises(ValueError):
        rician_log_pdf(-0.1, 1.0)
    with pytest.raises(ValueError):
        rician_log_pdf(1.0, 1.0, sigma=0.0)


def test_rician_reduces_to_rayleigh():
    a = np.linspace(1e-3, 10.0, 2001)
    for sigma in (0.5, 1.0, 2.0):
        ray = np.log(a / sigma**2) - a**2 / (2 * sigma**2)
        np.testing.assert_allclose(rician_log_pdf(a, 0.0, sigma), ray, rtol=0, atol=1e-12)


@pytest.mark.parametrize("nu", [0.0, 1.5, 3.0])
def test_rician_normalization(nu):
    val, _ = integrate.quad(lambda a: math.exp(rician_log_pdf(a, nu)), 0, nu + 12, limit=200,
                            epsabs=1e-12, epsrel=1e-12)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_rician_large_argument_no_overflow():
    a, nu = 5000.0, 5000.0
    got = rician_log_pdf(a, nu)
    assert np.isfinite(got)
    assert got == pytest.approx(stats.rice(nu).logpdf(a), abs=1e-6)


@given(st.floats(0.01, 30), st.floats(0, 20), st.floats(0.2, 5))
@settings(max_examples=200)
def test_rician_matches_scipy(a, nu, sigma):
    ref = stats.rice(nu / sigma, scale=sigma).logpdf(a)
    if not np.isfinite(ref) or ref < -700:
        # scipy's pdf underflows (or goes subnormal) in the far tail; compare
        # against the closed form evaluated in log space with the scaled Bessel I0
        z = a * nu / sigma**2
        ref = math.log(a / sigma**2) - (a - nu) ** 2 / (2 * sigma**2) + math.log(special.i0e(z))
    assert rician_log_pdf(a, nu, sigma) == pytest.approx(ref, abs=1e-8, rel=1e-9)


def test_rician_far_tail_example():
    # exact value from arbitrary-precision evaluation; scipy gives -742.1433 here
    assert rician_log_pdf(3.5, 11.25, 0.201171875) == pytest.approx(-741.958777514434, abs=1e-9)


def test_joint_equals_sum_of_marginals_plus_jacobian():
    tones = ToneModel(1.5, 3.0)
    rng = np.random.default_rng(4)
    for x, y in rng.uniform(0.5, 25, (50, 2)):
        parts = 0.0
        for db, nu in ((x, tones.nu_lhc), (y, tones.nu_rhc)):
            s = 10 ** (db / 10) - 1
            a = math.sqrt(2 * s)
            # d a / d dB = (ln10/10) 10^(dB/10) / a
            jac = math.log(math.log(10) / 10 * 10 ** (db / 10) / a)
            parts += rician_log_pdf(a, nu) + jac
        assert joint_polarized_log10_pdf(x, y, tones) == pytest.approx(parts / math.log(10), abs=1e-12)


def test_marginal_db_density_normalizes():
    # the dB-domain marginal is a proper density over (0, inf)
    for nu in (0.0, 3.0):
        val, _ = integrate.quad(lambda x: math.exp(model.marginal_db_log_pdf(x, nu)), 1e-9, 40,
                                limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)


@given(st.floats(0.1, 30), st.floats(0.1, 30), st.floats(0, 4))
def test_joint_symmetric_for_equal_tones(x, y, nu):
    tones = ToneModel(nu, nu)
    assert joint_polarized_log10_pdf(x, y, tones) == joint_polarized_log10_pdf(y, x, tones)


def test_tone_favoured_at_high_snr():
    hi = (20.0, 20.0)
    assert joint_polarized_log10_pdf(*hi, ToneModel(3.0, 3.0)) > joint_polarized_log10_pdf(*hi, ToneModel(0.0, 0.0))


def test_joint_rejects_negative_linear_snr():
    with pytest.raises(ValueError):
        joint_polarized_log10_pdf(-1.0, 12.0, ToneModel(0, 0))


def test_tone_model_validation():
    with pytest.raises(ValueError):
        ToneModel(-1.0, 0.0)
    with pytest.raises(ValueError):
        ToneModel(0.0, 0.0, sigma=0.0)


def test_record_round_trip():
    recs = [model.Detection(Pol.LHC, 59500, 0.25 * k, 1.4e9 + k, 12.0 + k) for k in range(5)]
    arr = model.detections_from_records(recs)
    assert arr.dtype == model.DETECTION_DTYPE
    assert model.detections_to_records(arr) == recs
    pairs = model.empty_pairs(3)
    pairs["dt_s"] = [-3.75, 0.0, 1.25]
    back = model.pairs_from_records(model.pairs_to_records(pairs))
    np.testing.assert_array_equal(back["dt_s"], pairs["dt_s"])


def test_on_time_grid():
    assert list(model.on_time_grid([0.0, 0.25, 100.75, 0.1, 0.25 + 2e-9])) == [True, True, True, False, False]
