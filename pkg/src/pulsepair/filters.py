"""Stage-3 RFI amelioration and the Δt/Δf matched-filter selection.

Chain order is fixed: central-IF excision, IIR narrowband rejection (run on
detections, before pairing), energy-burst rejection, hyperparameter filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import FFT_BIN_HZ, SNR_THRESHOLD_DB, TIME_GRID_S

_EPS = 1e-9


@dataclass(frozen=True)
class DtSpec:
    """Admitted Δt values: an explicit set on the 0.25 s grid or a closed range."""

    values: tuple[float, ...] | None = None
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if (self.values is None) == (self.lo is None or self.hi is None):
            raise ValueError("DtSpec needs either values or both lo and hi")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        elif self.lo > self.hi:
            raise ValueError(f"empty Δt range [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, *values: float) -> "DtSpec":
        return cls(values=tuple(values))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "DtSpec":
        return cls(lo=float(lo), hi=float(hi))

    @classmethod
    def abs_max(cls, x: float) -> "DtSpec":
        return cls(lo=-float(x), hi=float(x))

    def mask(self, dt_s) -> np.ndarray:
        dt = np.asarray(dt_s, dtype=float)
        if self.values is not None:
            idx = np.round(dt / TIME_GRID_S)
            on_grid = np.abs(dt - idx * TIME_GRID_S) <= _EPS
            wanted = np.round(np.array(self.values) / TIME_GRID_S)
            return on_grid & np.isin(idx, wanted)
        return (dt >= self.lo - _EPS) & (dt <= self.hi + _EPS)

    def grid_values(self, max_abs_dt_s: float = 10.0) -> list[float]:
        """Admitted grid values strictly inside the stage-2 window."""
        m = int(math.ceil(max_abs_dt_s / TIME_GRID_S))
        grid = np.arange(-m, m + 1) * TIME_GRID_S
        grid = grid[np.abs(grid) < max_abs_dt_s]
        return [float(v) for v in grid[self.mask(grid)]]

    def to_json(self) -> dict:
        if self.values is not None:
            return {"values": list(self.values)}
        return {"range": [self.lo, self.hi]}

    @classmethod
    def from_json(cls, obj: dict) -> "DtSpec":
        if "values" in obj:
            return cls.exact(*obj["values"])
        if "range" in obj:
            return cls.interval(*obj["range"])
        if "abs_max" in obj:
            return cls.abs_max(obj["abs_max"])
        raise ValueError(f"unrecognised dt_spec {obj!r}")


@dataclass(frozen=True)
class FilterConfig:
    dt_spec: DtSpec = field(default_factory=lambda: DtSpec.abs_max(3.0))
    df_abs_max_hz: float = 400.0
    df_abs_min_hz: float = 80.0
    if_excision_hz: tuple[float, float] = (1422.0e6, 1428.0e6)
    iir_gain: float = 0.99
    iir_threshold_db: float = 11.88
    iir_baseline_db: float = SNR_THRESHOLD_DB
    fft_bin_hz: float = FFT_BIN_HZ
    burst_window_s: float = 30.0
    burst_threshold: float = 150.0
    burst_dt_abs_max_s: float = 3.0
    burst_df_hz: tuple[float, float] = (80.0, 400.0)
    ra_subbin_hr: float = 0.03
    ra_bin_hr: float = 0.3
    n_ra_bins: int = 21
    ra_span_hr: float = 6.3

    def __post_init__(self):
        if not 0 <= self.df_abs_min_hz < self.df_abs_max_hz:
            raise ValueError("need 0 <= df_abs_min_hz < df_abs_max_hz")
        if not math.isclose(self.n_ra_bins * self.ra_bin_hr, self.ra_span_hr, rel_tol=1e-9):
            raise ValueError("n_ra_bins * ra_bin_hr must equal ra_span_hr")
        if not math.isclose(self.ra_bin_hr / self.ra_subbin_hr, 10.0, rel_tol=1e-9):
            raise ValueError("ra_bin_hr / ra_subbin_hr must be 10")
        if not 0 < self.iir_gain < 1:
            raise ValueError("iir_gain must be in (0, 1)")

    @property
    def n_ra_subbins(self) -> int:
        return int(round(self.ra_span_hr / self.ra_subbin_hr))


def ra_subbin(ra_hr, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    idx = np.floor(np.asarray(ra_hr, dtype=float) / cfg.ra_subbin_hr + _EPS).astype(np.int64)
    return np.clip(idx, 0, cfg.n_ra_subbins - 1)


def restrict_to_session(pairs: np.ndarray, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    """Drop pairs with RA outside the observed [0, ra_span) range."""
    ra = pairs["ra_hr"]
    return pairs[(ra >= 0.0) & (ra < cfg.ra_span_hr)]


# --------------------------------------------------------------------------
# central IF excision


def in_band(freq_hz, band) -> np.ndarray:
    f = np.asarray(freq_hz, dtype=float)
    return (f >= band[0]) & (f <= band[1])


def excise_central_if(pairs: np.ndarray, band=(1422.0e6, 1428.0e6)) -> np.ndarray:
    """Remove pairs with either pulse inside the closed excision band."""
    f_lhc = pairs["freq_hz"]
    f_rhc = pairs["freq_hz"] - pairs["df_hz"]
    return pairs[~(in_band(f_lhc, band) | in_band(f_rhc, band))]


def excise_detections(det: np.ndarray, band=(1422.0e6, 1428.0e6)) -> np.ndarray:
    return det[~in_band(det["freq_hz"], band)]


# --------------------------------------------------------------------------
# IIR narrowband burst rejection


def iir_burst_reject(det: np.ndarray, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    """Keep mask from a first-order IIR filter per frequency channel.

    Each (day, polarization, FFT-bin channel) carries ``y`` updated once per
    0.25 s epoch as ``y <- g y + (1 - g) x`` with ``x`` the channel's SNR in
    dB, or ``iir_baseline_db`` in epochs without a detection. A detection is
    dropped when the post-update ``y`` exceeds ``iir_threshold_db``.

    Returns
    -------
    ndarray of bool
        True for detections to keep, aligned with ``det``.
    """
    n = len(det)
    keep = np.ones(n, dtype=bool)
    if n == 0:
        return keep
    g, b = cfg.iir_gain, cfg.iir_baseline_db
    channel = np.floor(det["freq_hz"] / cfg.fft_bin_hz).astype(np.int64)
    epoch = np.round(det["t_s"] / TIME_GRID_S).astype(np.int64)
    stream = (det["mjd_day"].astype(np.int64) - det["mjd_day"].min()) * 2 + det["pol"]
    chan_key = stream * (channel.max() - channel.min() + 1) + (channel - channel.min())
    ep0 = epoch - epoch.min()
    span = int(ep0.max()) + 1
    if float(chan_key.max() + 1) * span < 2.0**62:
        order = np.argsort(chan_key * span + ep0, kind="stable")
    else:
        order = np.lexsort((ep0, chan_key))
    chan_o, ep_o = chan_key[order], ep0[order]

    # one update per (channel, epoch): coincident detections share the max SNR
    new_epoch = np.ones(n, dtype=bool)
    new_epoch[1:] = (chan_o[1:] != chan_o[:-1]) | (ep_o[1:] != ep_o[:-1])
    cell = np.cumsum(new_epoch) - 1
    n_cells = cell[-1] + 1
    x = np.full(n_cells, -np.inf)
    np.maximum.at(x, cell, det["snr_db"][order])
    cell_chan, ep = chan_o[new_epoch], ep_o[new_epoch]

    new_chan = np.ones(n_cells, dtype=bool)
    new_chan[1:] = cell_chan[1:] != cell_chan[:-1]
    chan_start = np.maximum.accumulate(np.where(new_chan, np.arange(n_cells), 0))
    rank = np.arange(n_cells) - chan_start

    z = np.zeros(n_cells)  # y - baseline, after the update
    by_rank = np.argsort(rank, kind="stable")
    bounds = np.searchsorted(rank[by_rank], np.arange(rank.max() + 2))
    for k in range(rank.max() + 1):
        idx = by_rank[bounds[k]:bounds[k + 1]]
        drive = (1.0 - g) * (x[idx] - b)
        if k == 0:
            z[idx] = drive
        else:
            z[idx] = g ** (ep[idx] - ep[idx - 1]) * z[idx - 1] + drive
    dropped_cell = b + z > cfg.iir_threshold_db
    keep[order] = ~dropped_cell[cell]
    return keep


def iir_reference(snr_by_epoch, cfg: FilterConfig = FilterConfig()) -> list[float]:
    """Epoch-by-epoch recurrence for one channel; ``None`` marks a silent epoch."""
    y = cfg.iir_baseline_db
    out = []
    for x in snr_by_epoch:
        y = cfg.iir_gain * y + (1.0 - cfg.iir_gain) * (cfg.iir_baseline_db if x is None else x)
        out.append(y)
    return out


# --------------------------------------------------------------------------
# energy burst filter


@dataclass(frozen=True)
class BurstMetricTable:
    """Burst metric per (mjd_day, RA subbin); cells absent from the table are 0."""

    mjd_day: np.ndarray
    subbin: np.ndarray
    metric: np.ndarray

    def __post_init__(self):
        if np.any(self.metric < 0):
            raise ValueError("burst metric must be >= 0")
        if np.any((self.subbin < 0) | (self.subbin >= 210)):
            raise ValueError("subbin index out of range")

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(d), int(s)): float(m)
                for d, s, m in zip(self.mjd_day, self.subbin, self.metric)}

    def lookup(self, mjd_day, subbin) -> np.ndarray:
        want = _cell_key(np.asarray(mjd_day), np.asarray(subbin))
        if not len(self.metric):
            return np.zeros(want.shape)
        keys = _cell_key(self.mjd_day, self.subbin)
        order = np.argsort(keys, kind="stable")
        keys, metric = keys[order], self.metric[order]
        pos = np.clip(np.searchsorted(keys, want), 0, len(keys) - 1)
        return np.where(keys[pos] == want, metric[pos], 0.0)


def _cell_key(day, subbin) -> np.ndarray:
    return np.asarray(day, dtype=np.int64) * 1000 + np.asarray(subbin, dtype=np.int64)


def burst_window_mask(pairs: np.ndarray, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    adf = np.abs(pairs["df_hz"])
    lo, hi = cfg.burst_df_hz
    return ((np.abs(pairs["dt_s"]) <= cfg.burst_dt_abs_max_s + _EPS)
            & (adf >= lo) & (adf <= hi))


def compute_burst_metric_table(pairs: np.ndarray, cfg: FilterConfig = FilterConfig()) -> BurstMetricTable:
    """Sum of (SNR_LHC_dB + SNR_RHC_dB)/2 over clustered pairs per cell.

    Only pairs in the fixed burst window (|Δt| <= 3 s, 80 <= |Δf| <= 400 Hz)
    count. Pair ``i`` contributes when another pair of the same cell has
    ``t_i < t_j <= t_i + burst_window_s``.
    """
    sel = pairs[burst_window_mask(pairs, cfg)]
    sel = restrict_to_session(sel, cfg)
    if not len(sel):
        z = np.zeros(0, dtype=np.int64)
        return BurstMetricTable(z, z, np.zeros(0))
    cell = _cell_key(sel["mjd_day"], ra_subbin(sel["ra_hr"], cfg))
    t = sel["t_s"]
    order = np.lexsort((t, cell))
    cell, t = cell[order], t[order]
    value = 0.5 * (sel["snr_lhc_db"][order] + sel["snr_rhc_db"][order])

    _, dense = np.unique(cell, return_inverse=True)
    key = dense * 4.0e5 + t  # t_s < 2e5 for any session
    nxt = np.searchsorted(key, key, side="right")
    has_next = nxt < len(key)
    nxt_c = np.minimum(nxt, len(key) - 1)
    qualifies = has_next & (dense[nxt_c] == dense) & (t[nxt_c] <= t + cfg.burst_window_s + _EPS)

    cells, inv = np.unique(cell, return_inverse=True)
    metric = np.bincount(inv, weights=np.where(qualifies, value, 0.0), minlength=len(cells))
    return BurstMetricTable(cells // 1000, cells % 1000, metric)


def apply_burst_filter(pairs: np.ndarray, table: BurstMetricTable,
                       threshold: float = 150.0, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    """Remove every pair in a (day, subbin) cell whose burst metric exceeds ``threshold``."""
    if not len(pairs):
        return pairs
    m = table.lookup(pairs["mjd_day"], ra_subbin(pairs["ra_hr"], cfg))
    return pairs[m <= threshold]


# --------------------------------------------------------------------------
# matched-filter hyperparameters


def hyperparameter_filter(pairs: np.ndarray, cfg: FilterConfig) -> np.ndarray:
    """Keep pairs admitted by ``dt_spec`` with df_abs_min <= |Δf| <= df_abs_max."""
    adf = np.abs(pairs["df_hz"])
    keep = cfg.dt_spec.mask(pairs["dt_s"]) & (adf >= cfg.df_abs_min_hz) & (adf <= cfg.df_abs_max_hz)
    return pairs[keep]


def prepare_detections(det: np.ndarray, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    """Detection-level part of the chain: excision then IIR rejection."""
    det = excise_detections(det, cfg.if_excision_hz)
    return det[iir_burst_reject(det, cfg)]


def apply_filter_chain(pairs: np.ndarray, cfg: FilterConfig,
                       table: BurstMetricTable | None = None):
    """Pair-level chain; returns ``(filtered_pairs, burst_table)``.

    ``table`` should be computed once from the full stage-2 output and reused
    across hyperparameter choices; when omitted it is computed from ``pairs``.
    """
    pairs = restrict_to_session(excise_central_if(pairs, cfg.if_excision_hz), cfg)
    if table is None:
        table = compute_burst_metric_table(pairs, cfg)
    pairs = apply_burst_filter(pairs, table, cfg.burst_threshold, cfg)
    return hyperparameter_filter(pairs, cfg), table
