"""Sorting metric, RA-bin binomial likelihoods and Δf repetition analysis."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .model import FFT_BIN_HZ, LOG10_E, db_to_linear_snr

N_RA_BINS = 21
RA_BIN_HR = 0.3
EVENT_PROB_SCALE = 1.8  # event probability ~= 1.8 * sigma_residuals / base


def snr_metric(snr_lhc_db, snr_rhc_db):
    """Joint-polarization sorting metric, ``log10(e) * (s_LHC + s_RHC)``.

    ``s_p`` are linear S/N values converted from the measured (S+N)/N dB.
    The result is the number of decades by which the AWGN exponential power
    tail probability of the pair falls.
    """
    s_l = np.asarray(db_to_linear_snr(snr_lhc_db))
    s_r = np.asarray(db_to_linear_snr(snr_rhc_db))
    if np.any(s_l < 0) or np.any(s_r < 0):
        raise ValueError("linear SNR must be >= 0")
    out = LOG10_E * (s_l + s_r)
    return out if out.ndim else float(out)


def with_snr_metric(pairs: np.ndarray) -> np.ndarray:
    pairs = pairs.copy()
    if len(pairs):
        pairs["snr_metric"] = snr_metric(pairs["snr_lhc_db"], pairs["snr_rhc_db"])
    return pairs


def sort_pairs_desc(pairs: np.ndarray) -> np.ndarray:
    """Descending by snr_metric; ties by (mjd_timestamp, freq_hz) ascending."""
    if np.any(np.isnan(pairs["snr_metric"])):
        raise ValueError("snr_metric not computed")
    order = np.lexsort((pairs["df_hz"], pairs["dt_s"], pairs["freq_hz"],
                        pairs["mjd_timestamp"], -pairs["snr_metric"]))
    return pairs[order]


def ra_bin(ra_hr, bin_hr: float = RA_BIN_HR, n_bins: int = N_RA_BINS):
    """RA bin index ``floor(ra / bin_hr)``; raises for RA outside the session."""
    ra = np.asarray(ra_hr, dtype=float)
    if np.any((ra < 0) | (ra >= bin_hr * n_bins)):
        raise ValueError(f"RA outside [0, {bin_hr * n_bins}) h")
    idx = np.minimum(np.floor(ra / bin_hr + 1e-9).astype(np.int64), n_bins - 1)
    return idx if idx.ndim else int(idx)


# --------------------------------------------------------------------------
# binomial


def binomial_logpmf(k, n, p):
    """Natural-log binomial pmf, stable for n up to ~1e6 and p in {0, 1}."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(k < 0) or np.any(k > n):
        raise ValueError("need 0 <= k <= n")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("need 0 <= p <= 1")
    log_c = special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)
    out = log_c + special.xlogy(k, p) + special.xlog1py(n - k, -p)
    return out if out.ndim else float(out)


def binomial_pmf(k, n, p):
    """``C(n, k) p**k (1 - p)**(n - k)``, evaluated in log space."""
    out = np.exp(binomial_logpmf(k, n, p))
    return out if np.ndim(out) else float(out)


# --------------------------------------------------------------------------
# RA density likelihood


@dataclass
class LikelihoodSeries:
    """Ranked pairs with their RA bin, running count in that bin and the
    clamped log10 binomial likelihood at that rank."""

    pairs: np.ndarray
    rank: np.ndarray
    ra_bin: np.ndarray
    cumulative_count: np.ndarray
    log10_likelihood: np.ndarray
    n_bins: int = N_RA_BINS

    def __len__(self):
        return len(self.rank)

    def bin_minimum(self) -> np.ndarray:
        """Minimum log10 likelihood per bin (NaN for empty bins)."""
        out = np.full(self.n_bins, np.nan)
        for b in range(self.n_bins):
            sel = self.ra_bin == b
            if sel.any():
                out[b] = self.log10_likelihood[sel].min()
        return out

    def minimum(self) -> float:
        return float(self.log10_likelihood.min()) if len(self) else 0.0

    def bin_members_to_minimum(self, b: int) -> np.ndarray:
        """Indices of bin ``b`` entries ranked at or above the bin's minimum."""
        sel = np.nonzero(self.ra_bin == b)[0]
        if not len(sel):
            return sel
        stop = sel[np.argmin(self.log10_likelihood[sel])]
        return sel[sel <= stop]


def ra_density_log_likelihood(ranked: np.ndarray, n_bins: int = N_RA_BINS,
                              bin_hr: float = RA_BIN_HR) -> LikelihoodSeries:
    """Binomial likelihood of each bin's running count along the ranked list.

    At rank ``n`` with ``k`` of the first ``n`` pairs in the pair's own bin,
    the likelihood is ``pmf(k; n, 1/n_bins)``; counts below the noise
    expectation ``n/n_bins`` are clamped to ``pmf(round(n/n_bins); n, 1/n_bins)``
    so that only excesses show.
    """
    p = 1.0 / n_bins
    bins = ra_bin(ranked["ra_hr"], bin_hr, n_bins) if len(ranked) else np.zeros(0, np.int64)
    bins = np.atleast_1d(bins)
    ranks = np.arange(1, len(ranked) + 1)
    counts = np.zeros(len(ranked), dtype=np.int64)
    running = np.zeros(n_bins, dtype=np.int64)
    for i, b in enumerate(bins):
        running[b] += 1
        counts[i] = running[b]
    expected = np.floor(ranks / n_bins + 0.5)
    k_eff = np.where(counts < ranks / n_bins, expected, counts)
    loglik = binomial_logpmf(k_eff, ranks, p) / math.log(10.0) if len(ranked) else np.zeros(0)
    return LikelihoodSeries(ranked, ranks, bins, counts, np.minimum(np.atleast_1d(loglik), 0.0), n_bins)


# --------------------------------------------------------------------------
# Δf multiplier repetition


def multiplier_residuals(df_hz, base_hz: float) -> np.ndarray:
    """Signed residual of Δf to the nearest nonzero multiple of ±base."""
    df = np.asarray(df_hz, dtype=float)
    k = np.maximum(1.0, np.round(np.abs(df) / base_hz))
    return np.sign(df) * (np.abs(df) - k * base_hz)


@dataclass
class McMultiplierResult:
    base_hz: float
    sigma_res_hz: float
    event_probability: float
    sigma_residuals_hz: float
    n_trials: int
    standard_error: float


def mc_multiplier_event_probability(base_hz: float, df_range_hz=(80.0, 400.0),
                                    sigma_res_hz: float = 8.43, n_trials: int = 1000,
                                    seed: int = 0) -> McMultiplierResult:
    """Monte Carlo multiplier-event probability for uniform Δf.

    Draws |Δf| uniform on ``df_range_hz`` with a random sign and returns the
    fraction whose residual to the nearest nonzero multiple satisfies
    ``|residual| <= sigma_res_hz``. ``sigma_residuals_hz`` is the standard
    deviation of ``|residual|`` over all draws.
    """
    lo, hi = df_range_hz
    if not base_hz > 0:
        raise ValueError("base_hz must be > 0")
    if not 0 <= lo < hi:
        raise ValueError(f"malformed df range {df_range_hz}")
    if not 0 <= sigma_res_hz <= base_hz / 2:
        raise ValueError("sigma_res_hz must lie in [0, base_hz/2]")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    df = rng.choice([-1.0, 1.0], n_trials) * rng.uniform(lo, hi, n_trials)
    res = np.abs(multiplier_residuals(df, base_hz))
    p = float(np.mean(res <= sigma_res_hz))
    return McMultiplierResult(base_hz, sigma_res_hz, p, float(np.std(res)), n_trials,
                              math.sqrt(p * (1 - p) / n_trials))


@dataclass
class MultiplierAnalysis:
    base_hz: float
    residuals_hz: list[float]
    sigma_residuals_hz: float
    event_probability: float
    k_events: int
    n_trials: int
    raw_likelihood: float
    multiplier_freedom_N: int
    corrected_likelihood: float

    def to_json(self) -> dict:
        return asdict(self)


def repetition_likelihood(df_hz, base_hz: float, fft_bin_hz: float = FFT_BIN_HZ) -> MultiplierAnalysis:
    """Likelihood that every pair's Δf sits near a multiple of ``base_hz``.

    The event probability is ``1.8 * max|residual| / base``, floored at the
    FFT quantization limit ``1.8 * (fft_bin/2) / base``; with all ``n`` pairs
    counted as events the likelihood is ``p**n``, then multiplied by the
    ``round(base / fft_bin)`` base values that could have been chosen.
    """
    df = np.sort(np.asarray(df_hz, dtype=float))  # order-free result
    if not len(df):
        raise ValueError("need at least one pair")
    res = multiplier_residuals(df, base_hz)
    sigma_cap = float(np.max(np.abs(res)))
    p_floor = EVENT_PROB_SCALE * (fft_bin_hz / 2.0) / base_hz
    p = min(1.0, max(EVENT_PROB_SCALE * sigma_cap / base_hz, p_floor))
    n = len(df)
    raw = binomial_pmf(n, n, p)
    big_n = int(round(base_hz / fft_bin_hz))
    return MultiplierAnalysis(base_hz, [float(r) for r in res], sigma_cap, p, n, n, raw,
                              big_n, trials_correction(raw, big_n))


def noise_adjusted_repetition(df_hz, last_rank: int, base_hz: float, n_bins: int = N_RA_BINS,
                              fft_bin_hz: float = FFT_BIN_HZ) -> MultiplierAnalysis:
    """Repetition likelihood after discarding the expected noise pairs.

    About one noise pair lands in any bin per ``n_bins`` trials, so
    ``round(last_rank / n_bins)`` pairs are dropped, taking those with the
    largest residuals.
    """
    df = np.asarray(df_hz, dtype=float)
    n_drop = int(math.floor(last_rank / n_bins + 0.5))
    n_keep = max(1, len(df) - n_drop)
    res = np.abs(multiplier_residuals(df, base_hz))
    keep = np.sort(np.argsort(res, kind="stable")[:n_keep])
    return repetition_likelihood(df[keep], base_hz, fft_bin_hz)


def trials_correction(likelihood: float, n: float) -> float:
    """``min(1, N * likelihood)`` for N equivalent receiver choices."""
    if n < 1:
        raise ValueError("N must be >= 1")
    return min(1.0, n * likelihood)


def half_range_concentration(df_hz, df_lo: float, df_hi: float, sub_lo: float, sub_hi: float,
                             n_ranges: int = 2) -> float:
    """Chance that all |Δf| fall in one half of the filter range.

    Returns ``n_ranges * 2**-k`` (capped at 1) when all k pairs lie in
    ``[sub_lo, sub_hi]``, else 1.
    """
    if not math.isclose(sub_hi - sub_lo, 0.5 * (df_hi - df_lo), rel_tol=1e-9):
        raise ValueError("sub-range must be half of the filter range by measure")
    if not (df_lo <= sub_lo and sub_hi <= df_hi):
        raise ValueError("sub-range must lie inside the filter range")
    adf = np.abs(np.asarray(df_hz, dtype=float))
    k = len(adf)
    if k == 0 or not np.all((adf >= sub_lo) & (adf <= sub_hi)):
        return 1.0
    return min(1.0, n_ranges * 0.5**k)


# --------------------------------------------------------------------------
# calibration helpers


@dataclass
class BinTailEstimate:
    any_bin: float
    named_bin: float
    n_boot: int
    window_days: int
    min_count: int


def bootstrap_bin_count_tail(day_bin_counts, window_days: int = 65, min_count: int = 8,
                             named_bin: int = 17, n_boot: int = 2000, seed: int = 0) -> BinTailEstimate:
    """Day-block bootstrap of per-bin pair counts over a ``window_days`` span.

    ``day_bin_counts`` has one row per observed day (pooled over noise runs)
    and one column per RA bin. Each replication sums ``window_days`` rows
    drawn with replacement and records whether any bin, and whether
    ``named_bin``, reach ``min_count``.
    """
    counts = np.asarray(day_bin_counts)
    rng = np.random.default_rng(seed)
    any_hits = named_hits = 0
    for _ in range(n_boot):
        total = counts[rng.integers(0, len(counts), window_days)].sum(axis=0)
        any_hits += bool(np.any(total >= min_count))
        named_hits += bool(total[named_bin] >= min_count)
    return BinTailEstimate(any_hits / n_boot, named_hits / n_boot, n_boot, window_days, min_count)
