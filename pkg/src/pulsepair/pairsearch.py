"""Stage 2: opposite-polarization pulse pairing within a coarse Δt/Δf window.

The join buckets time into blocks one window wide and binary-searches a
frequency band inside the neighbouring blocks, so the cost is
O(n log n + candidates) rather than O(n_lhc * n_rhc), with candidates a
small superset of the output.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import TIME_GRID_S, empty_pairs
from .scenario import GREEN_BANK_LON_DEG, mjd_to_ra

PAIR_HEADER = "mjd_timestamp,ra_hr,dt_s,df_hz,freq_hz,snr_lhc_db,snr_rhc_db"


@dataclass(frozen=True)
class CoarseWindow:
    """Strict stage-2 limits: |Δt| < max_abs_dt_s and |Δf| < max_abs_df_hz."""

    max_abs_dt_s: float = 10.0
    max_abs_df_hz: float = 2000.0


def _check_inputs(lhc: np.ndarray, rhc: np.ndarray) -> int | None:
    for name, det in (("lhc", lhc), ("rhc", rhc)):
        if len(det) and np.any(np.diff(det["t_s"]) < 0):
            raise ValueError(f"{name} detections are not sorted by time")
    days = np.unique(np.concatenate([lhc["mjd_day"], rhc["mjd_day"]]))
    if len(days) > 1:
        raise ValueError(f"mixed-day input: {days.tolist()}")
    return int(days[0]) if len(days) else None


def _band_candidates(key_l, key_r_sorted, width):
    # widened by a hair; the exact strict predicate is applied afterwards
    pad = width * (1 + 1e-9) + 1e-3
    lo = np.searchsorted(key_r_sorted, key_l - pad, side="left")
    hi = np.searchsorted(key_r_sorted, key_l + pad, side="right")
    return lo, hi


def _expand(lo, hi):
    counts = hi - lo
    idx_l = np.repeat(np.arange(len(lo)), counts)
    starts = np.repeat(lo - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    idx_r = starts + np.arange(counts.sum())
    return idx_l, idx_r


def search_pairs(lhc: np.ndarray, rhc: np.ndarray, coarse: CoarseWindow = CoarseWindow(),
                 site_longitude_deg: float = GREEN_BANK_LON_DEG) -> np.ndarray:
    """Every (LHC, RHC) pair inside the coarse window, as a pair table.

    RHC detections are bucketed into time blocks one Δt-window wide and
    sorted by frequency inside each block, so each LHC detection needs a
    frequency band search in its own and the two neighbouring blocks only.

    Parameters
    ----------
    lhc, rhc : ndarray of DETECTION_DTYPE
        One day's detections per polarization, sorted by ``t_s``.
    coarse : CoarseWindow
        Strict |Δt| and |Δf| limits.

    Returns
    -------
    ndarray of PAIR_DTYPE
        Sorted by (earlier pulse time, LHC frequency, Δt, Δf). ``snr_metric``
        is left as NaN.

    Raises
    ------
    ValueError
        If an input is not time sorted or the inputs span several days.
    """
    day = _check_inputs(lhc, rhc)
    if day is None or not len(lhc) or not len(rhc):
        return empty_pairs()

    t_l, t_r = lhc["t_s"], rhc["t_s"]
    f_l, f_r = lhc["freq_hz"], rhc["freq_hz"]
    t0 = min(t_l.min(), t_r.min())
    f0 = min(f_l.min(), f_r.min())
    # block stride exceeds the frequency span plus both pads
    stride = (max(f_l.max(), f_r.max()) - f0) + 4.0 * coarse.max_abs_df_hz + 16.0
    blk_l = np.floor((t_l - t0) / coarse.max_abs_dt_s)
    blk_r = np.floor((t_r - t0) / coarse.max_abs_dt_s)
    key_r = blk_r * stride + (f_r - f0)
    order = np.argsort(key_r, kind="stable")
    key_r = key_r[order]

    key_l = blk_l * stride + (f_l - f0)
    order_l = np.argsort(key_l, kind="stable")  # sorted queries search faster
    key_l = key_l[order_l]

    il_parts, ir_parts = [], []
    for shift in (-1.0, 0.0, 1.0):
        lo, hi = _band_candidates(key_l + shift * stride, key_r, coarse.max_abs_df_hz)
        il, ir = _expand(lo, hi)
        il_parts.append(order_l[il])
        ir_parts.append(order[ir])
    il = np.concatenate(il_parts)
    ir = np.concatenate(ir_parts)

    dt = t_l[il] - t_r[ir]
    df = f_l[il] - f_r[ir]
    keep = (np.abs(dt) < coarse.max_abs_dt_s) & (np.abs(df) < coarse.max_abs_df_hz)
    il, ir, dt, df = il[keep], ir[keep], dt[keep], df[keep]
    return _assemble(day, lhc, rhc, il, ir, dt, df, site_longitude_deg)


def _assemble(day, lhc, rhc, il, ir, dt, df, site_longitude_deg):
    t_early = np.minimum(lhc["t_s"][il], rhc["t_s"][ir])
    out = empty_pairs(len(il))
    out["mjd_day"] = day
    out["t_s"] = t_early
    # rounded to the stage-2 file precision, so in-memory and on-disk runs agree
    out["mjd_timestamp"] = np.round(day + t_early / 86400.0, 10)
    out["ra_hr"] = np.round(mjd_to_ra(day + t_early / 86400.0, site_longitude_deg), 8)
    out["dt_s"] = np.round(dt, 2)
    out["df_hz"] = np.round(df, 3)
    out["freq_hz"] = lhc["freq_hz"][il]
    out["snr_lhc_db"] = lhc["snr_db"][il]
    out["snr_rhc_db"] = rhc["snr_db"][ir]
    return sort_pairs_by_time(out)


def sort_pairs_by_time(pairs: np.ndarray) -> np.ndarray:
    return pairs[np.lexsort((pairs["df_hz"], pairs["dt_s"], pairs["freq_hz"], pairs["t_s"]))]


def brute_force_pairs(lhc: np.ndarray, rhc: np.ndarray, coarse: CoarseWindow = CoarseWindow(),
                      site_longitude_deg: float = GREEN_BANK_LON_DEG) -> np.ndarray:
    """All-combinations reference pairing; O(n_lhc * n_rhc)."""
    day = _check_inputs(lhc, rhc)
    if day is None or not len(lhc) or not len(rhc):
        return empty_pairs()
    il_all, ir_all = [], []
    step = max(1, 2_000_000 // max(1, len(rhc)))
    for start in range(0, len(lhc), step):
        blk = slice(start, start + step)
        dt = lhc["t_s"][blk, None] - rhc["t_s"][None, :]
        df = lhc["freq_hz"][blk, None] - rhc["freq_hz"][None, :]
        i, j = np.nonzero((np.abs(dt) < coarse.max_abs_dt_s) & (np.abs(df) < coarse.max_abs_df_hz))
        il_all.append(i + start)
        ir_all.append(j)
    il = np.concatenate(il_all)
    ir = np.concatenate(ir_all)
    dt = lhc["t_s"][il] - rhc["t_s"][ir]
    df = lhc["freq_hz"][il] - rhc["freq_hz"][ir]
    return _assemble(day, lhc, rhc, il, ir, dt, df, site_longitude_deg)


# --------------------------------------------------------------------------
# stage-2 file format


def pair_filename(mjd_day: int) -> str:
    return f"pairs_{mjd_day}.csv"


def format_pair_rows(pairs: np.ndarray, extra: dict[str, tuple[str, np.ndarray]] | None = None):
    cols = [
        ("%.10f", pairs["mjd_timestamp"]),
        ("%.8f", pairs["ra_hr"]),
        ("%.2f", pairs["dt_s"]),
        ("%.3f", pairs["df_hz"]),
        ("%.3f", pairs["freq_hz"]),
        ("%.4f", pairs["snr_lhc_db"]),
        ("%.4f", pairs["snr_rhc_db"]),
    ]
    for fmt, values in (extra or {}).values():
        cols.append((fmt, values))
    fmt = ",".join(c[0] for c in cols)
    data = list(zip(*[c[1].tolist() for c in cols]))
    return [fmt % row for row in data]


def write_pairs(path, pairs: np.ndarray) -> None:
    lines = [PAIR_HEADER] + format_pair_rows(pairs)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_pairs(path, mjd_day: int | None = None) -> np.ndarray:
    """Read a stage-2 pair file; the day defaults to the one in its name."""
    path = Path(path)
    if mjd_day is None:
        mjd_day = int(path.stem.split("_")[-1])
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith(PAIR_HEADER):
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [line.rstrip("\n").split(",")[:7] for line in fh if line.strip()]
    out = empty_pairs(len(rows))
    if rows:
        values = np.array(rows, dtype=float)
        for k, name in enumerate(PAIR_HEADER.split(",")):
            out[name] = values[:, k]
        out["mjd_day"] = mjd_day
        t = (out["mjd_timestamp"] - mjd_day) * 86400.0
        out["t_s"] = np.round(t / TIME_GRID_S) * TIME_GRID_S
    return out
