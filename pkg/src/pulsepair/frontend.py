"""Desk-scale IQ synthesis and FFT energy detection.

Complex baseband noise has unit variance per quadrature; tones are complex
exponentials with amplitude in the same units. The detector integrates
``integration_s`` (one 1/fft_bin_hz FFT at the defaults) at every 0.25 s
grid time, normalizes each bin power by a wideband trimmed-mean noise
estimate and reports bins whose (S+N)/N exceeds the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft
from scipy import stats

from .model import FFT_BIN_HZ, SNR_THRESHOLD_DB, TIME_GRID_S, Pol, empty_detections


@dataclass(frozen=True)
class FrontendConfig:
    fft_bin_hz: float = FFT_BIN_HZ
    integration_s: float = 0.27
    band_lo_hz: float = 1410.000e6
    band_hi_hz: float = 1410.064e6
    snr_threshold_db: float = SNR_THRESHOLD_DB
    lo_excision_lo_hz: float | None = 1422.0e6
    lo_excision_hi_hz: float | None = 1428.0e6
    phase_grid_s: float = TIME_GRID_S
    oversample: float = 2.0
    trim_fraction: float = 0.1  # cut from each tail of the noise estimate

    def __post_init__(self):
        if not self.band_lo_hz < self.band_hi_hz:
            raise ValueError("band_lo_hz must be < band_hi_hz")
        if not self.fft_bin_hz > 0 or not self.integration_s > 0:
            raise ValueError("fft_bin_hz and integration_s must be > 0")
        if (self.lo_excision_lo_hz is None) != (self.lo_excision_hi_hz is None):
            raise ValueError("set both excision edges or neither")
        if self.lo_excision_lo_hz is not None and not self.lo_excision_lo_hz < self.lo_excision_hi_hz:
            raise ValueError("malformed excision band")
        if self.oversample < 2.0:
            raise ValueError("sample rate must be at least twice the band span")
        n = self.integration_s * self.fft_bin_hz
        if round(n) < 1 or abs(n - round(n)) > 0.02 * round(n):
            raise ValueError(f"integration_s={self.integration_s} is not a whole number "
                             f"of {1 / self.fft_bin_hz:.4f} s FFTs")

    @property
    def span_hz(self) -> float:
        return self.band_hi_hz - self.band_lo_hz

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.band_lo_hz + self.band_hi_hz)

    @property
    def n_fft(self) -> int:
        return int(math.ceil(self.oversample * self.span_hz / self.fft_bin_hz))

    @property
    def sample_rate(self) -> float:
        return self.n_fft * self.fft_bin_hz

    @property
    def n_avg(self) -> int:
        return int(round(self.integration_s * self.fft_bin_hz))

    def bin_freqs(self) -> np.ndarray:
        return self.center_hz + sp_fft.fftfreq(self.n_fft, 1.0 / self.sample_rate)

    def usable_bins(self) -> np.ndarray:
        f = self.bin_freqs()
        ok = (f >= self.band_lo_hz) & (f < self.band_hi_hz)
        if self.lo_excision_lo_hz is not None:
            ok &= ~((f >= self.lo_excision_lo_hz) & (f <= self.lo_excision_hi_hz))
        return ok


@dataclass(frozen=True)
class Tone:
    freq_hz: float
    amplitude: float
    pols: tuple[str, ...] = ("LHC", "RHC")
    start_s: float = 0.0
    stop_s: float = math.inf
    phase: float = 0.0


def synth_iq(tones, duration_s: float, seed: int, cfg: FrontendConfig = FrontendConfig()):
    """Complex baseband streams per polarization, deterministic in ``seed``.

    Returns
    -------
    dict
        ``{Pol.LHC: ndarray, Pol.RHC: ndarray}`` of complex128 samples at
        ``cfg.sample_rate``.
    """
    if not duration_s > 0:
        raise ValueError("duration_s must be > 0")
    for tone in tones:
        if not cfg.band_lo_hz <= tone.freq_hz < cfg.band_hi_hz:
            raise ValueError(f"tone at {tone.freq_hz} Hz outside the band")
    fs = cfg.sample_rate
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    out = {}
    for pol in Pol:
        rng = np.random.default_rng(np.random.SeedSequence([seed, int(pol)]))
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        for tone in tones:
            if pol.name not in tone.pols:
                continue
            on = (t >= tone.start_s) & (t < tone.stop_s)
            w = 2.0 * np.pi * (tone.freq_hz - cfg.center_hz)
            x[on] += tone.amplitude * np.exp(1j * (w * t[on] + tone.phase))
        out[pol] = x
    return out


def trimmed_mean_bias(n_avg: int, trim: float) -> float:
    """Trimmed mean of a unit-mean Gamma(n_avg)/n_avg power, i.e. the factor
    by which a trimmed-mean noise estimate under-reads the true mean."""
    dist = stats.gamma(n_avg, scale=1.0 / n_avg)
    upper = stats.gamma(n_avg + 1, scale=1.0 / n_avg)
    q_lo, q_hi = dist.ppf(trim), dist.ppf(1.0 - trim)
    return float((upper.cdf(q_hi) - upper.cdf(q_lo)) / (1.0 - 2.0 * trim))


def window_powers(x: np.ndarray, cfg: FrontendConfig, chunk: int = 32):
    """Yield ``(window_index, bin_powers)`` blocks for every grid-aligned window."""
    fs = cfg.sample_rate
    length = cfg.n_avg * cfg.n_fft
    n_win = int(math.floor((len(x) - length) / (cfg.phase_grid_s * fs))) + 1
    if n_win < 1:
        raise ValueError("stream shorter than one integration")
    starts = np.round(np.arange(n_win) * cfg.phase_grid_s * fs).astype(np.int64)
    starts = starts[starts + length <= len(x)]
    offs = np.arange(length)
    for i in range(0, len(starts), chunk):
        s = starts[i:i + chunk]
        seg = x[s[:, None] + offs].reshape(len(s), cfg.n_avg, cfg.n_fft)
        p = np.abs(sp_fft.fft(seg, axis=-1)) ** 2 / cfg.n_fft
        yield np.arange(i, i + len(s)), p.mean(axis=1)


def fft_energy_detect(streams, cfg: FrontendConfig = FrontendConfig(), mjd_day: int = 0,
                      t0_s: float = 0.0) -> np.ndarray:
    """Stage-1 detections from per-polarization IQ streams.

    The noise power of each window is the bias-corrected trimmed mean over
    the usable (in-band, non-excised) bins; bins inside the excision band
    are never reported. Output is sorted by (t_s, freq_hz).
    """
    usable = cfg.usable_bins()
    freqs = cfg.bin_freqs()[usable]
    ratio_thr = 10.0 ** (cfg.snr_threshold_db / 10.0)
    bias = trimmed_mean_bias(cfg.n_avg, cfg.trim_fraction)
    chunks = []
    for pol, x in streams.items():
        for win, power in window_powers(x, cfg):
            p = power[:, usable]
            noise = stats.trim_mean(p, cfg.trim_fraction, axis=1) / bias
            ratio = p / noise[:, None]
            w, b = np.nonzero(ratio > ratio_thr)
            det = empty_detections(len(w))
            det["pol"] = int(pol)
            det["mjd_day"] = mjd_day
            det["t_s"] = t0_s + win[w] * cfg.phase_grid_s
            det["freq_hz"] = freqs[b]
            det["snr_db"] = 10.0 * np.log10(ratio[w, b])
            chunks.append(det)
    det = np.concatenate(chunks) if chunks else empty_detections()
    return det[np.lexsort((det["freq_hz"], det["pol"], det["t_s"]))]
