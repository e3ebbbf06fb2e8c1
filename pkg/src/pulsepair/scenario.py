"""Statistical generator of stage-1 detection streams for a drift-scan sky.

The generator works directly at the Detection level: a Poisson noise
process on the 0.25 s grid per polarization, plus injected transmitter pulse
pairs, wideband energy bursts and narrowband RFI. Sessions run once per MJD
day from the time the local sidereal time wraps through 0 h until it reaches
``session_hours``, so the beam sweeps RA 0 to 6.3 h each day.

Stage-1 files are UTF-8 CSV, ``det_<mjd_day>_<pol>.csv``, with header
``pol,mjd_day,t_s,freq_hz,snr_db`` sorted by (t_s, freq_hz). ``t_s`` counts
seconds from 00:00 UTC of ``mjd_day`` and exceeds 86400 for sessions that
run past midnight.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .model import (
    SNR_THRESHOLD_DB,
    TIME_GRID_S,
    Pol,
    empty_detections,
    linear_snr_to_db,
    threshold_linear_snr,
)

logger = logging.getLogger(__name__)

GREEN_BANK_LON_DEG = -79.8398
SIDEREAL_RATE = 24.06570982441908 / 24.0  # sidereal hours per solar hour
SIDEREAL_DAY_DAYS = 24.0 / 24.06570982441908
BEAM_FWHM_DEG = 2.0
BEAM_TRUNCATION_FWHM = 1.5
DEFAULT_START_MJD = 59440

# stream ids for per-(seed, day) substreams
_NOISE, _INJECTION, _BURST, _RFI = 0, 1, 2, 3


def mjd_to_ra(mjd_timestamp, site_longitude_deg: float = GREEN_BANK_LON_DEG):
    """Local sidereal time in hours, i.e. the RA on the meridian.

    GMST from the standard linear approximation
    ``18.697374558 + 24.06570982441908 * (MJD - 51544.5)`` hours, plus the
    east longitude.
    """
    mjd = np.asarray(mjd_timestamp, dtype=float)
    gmst = 18.697374558 + 24.06570982441908 * (mjd - 51544.5)
    out = np.mod(gmst + site_longitude_deg / 15.0, 24.0)
    return out if out.ndim else float(out)


def beam_fwhm_ra_hr(dec_deg: float, fwhm_deg: float = BEAM_FWHM_DEG) -> float:
    """Beam FWHM expressed as hours of RA at declination ``dec_deg``."""
    return fwhm_deg / 15.0 / math.cos(math.radians(dec_deg))


# --------------------------------------------------------------------------
# scenario description


def _as_range(v) -> tuple[float, float]:
    if isinstance(v, (int, float)):
        return float(v), float(v)
    lo, hi = v
    return float(lo), float(hi)


@dataclass(frozen=True)
class Injection:
    """A transmitter emitting polarized pulse pairs from one sky direction.

    ``snr_lhc_db`` / ``snr_rhc_db`` are either a fixed dB value or a
    ``(lo, hi)`` range drawn uniformly per pulse. With ``df_base_hz`` set,
    each pair's Δf is a random admissible multiple ``±k * df_base_hz`` (those
    with ``|k * base|`` inside ``df_range_hz``) plus Gaussian jitter of sd
    ``df_jitter_hz``; otherwise Δf is uniform over ``±df_range_hz``.
    """

    ra_hr: float
    dt_s: float
    dec_deg: float = -7.6
    df_base_hz: float | None = None
    df_jitter_hz: float = 0.0
    df_range_hz: tuple[float, float] = (80.0, 400.0)
    snr_lhc_db: float | tuple[float, float] = (13.0, 18.0)
    snr_rhc_db: float | tuple[float, float] = (13.0, 18.0)
    active_mjd_days: tuple[int, ...] | None = None
    pulses_per_transit: int = 1
    burst_bandwidth_hz: float | None = None
    burst_duration_s: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.ra_hr < 24.0:
            raise ValueError(f"injection ra_hr {self.ra_hr} outside [0, 24)")
        if abs(self.dt_s / TIME_GRID_S - round(self.dt_s / TIME_GRID_S)) > 1e-9:
            raise ValueError(f"injection dt_s {self.dt_s} is not a multiple of {TIME_GRID_S}")
        if self.pulses_per_transit < 0:
            raise ValueError("pulses_per_transit must be >= 0")
        if self.df_jitter_hz < 0:
            raise ValueError("df_jitter_hz must be >= 0")
        lo, hi = self.df_range_hz
        if not 0 <= lo <= hi:
            raise ValueError(f"malformed df_range_hz {self.df_range_hz}")
        if self.df_base_hz is not None and not self.admissible_multiples():
            raise ValueError("no multiple of df_base_hz falls inside df_range_hz")

    def admissible_multiples(self) -> list[int]:
        lo, hi = self.df_range_hz
        b = self.df_base_hz
        return [k for k in range(1, int(hi // b) + 2) if lo <= k * b <= hi]


@dataclass(frozen=True)
class EnergyBurstEvent:
    """Seconds-scale wideband cluster of spurious pulse pairs."""

    mjd_timestamp: float
    duration_s: float = 20.0
    n_pairs: int = 15
    dt_spread_s: float = 1.0
    snr_db: float | tuple[float, float] = (12.0, 13.0)
    df_range_hz: tuple[float, float] = (80.0, 400.0)


@dataclass(frozen=True)
class NarrowbandRfiEvent:
    """Repeated pulses confined to one narrow frequency range."""

    freq_hz: float
    start_mjd: float
    stop_mjd: float
    snr_db: float | tuple[float, float] = 12.5
    interval_s: float = 0.25
    pols: tuple[str, ...] = ("LHC", "RHC")
    bandwidth_hz: float = 0.0


@dataclass(frozen=True)
class Scenario:
    n_days: int
    noise_detection_rate: float
    start_mjd: int = DEFAULT_START_MJD
    session_hours: float = 6.3
    band_lo_hz: float = 1400.0e6
    band_hi_hz: float = 1450.0e6
    excision_hz: tuple[float, float] | None = (1422.0e6, 1428.0e6)
    excise_noise: bool = True
    snr_threshold_db: float = SNR_THRESHOLD_DB
    site_longitude_deg: float = GREEN_BANK_LON_DEG
    injections: tuple[Injection, ...] = ()
    bursts: tuple[EnergyBurstEvent, ...] = ()
    rfi: tuple[NarrowbandRfiEvent, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.n_days < 0:
            raise ValueError("n_days must be >= 0")
        if not self.noise_detection_rate >= 0:
            raise ValueError("noise_detection_rate must be >= 0")
        if not 0 < self.session_hours < 24:
            raise ValueError("session_hours must be in (0, 24)")
        if not self.band_lo_hz < self.band_hi_hz:
            raise ValueError("band_lo_hz must be < band_hi_hz")
        if self.excision_hz is not None and not self.excision_hz[0] < self.excision_hz[1]:
            raise ValueError("malformed excision band")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        for inj in self.injections:
            if not 0.0 <= inj.ra_hr < 24.0:
                raise ValueError("injection RA outside [0, 24)")
        for ev in self.rfi:
            if not self.band_lo_hz <= ev.freq_hz <= self.band_hi_hz:
                raise ValueError(f"RFI frequency {ev.freq_hz} outside band")
            if ev.interval_s <= 0:
                raise ValueError("RFI interval must be > 0")
        # frozen dataclass: normalize list inputs to tuples
        for name in ("injections", "bursts", "rfi"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def mjd_days(self) -> range:
        return range(self.start_mjd, self.start_mjd + self.n_days)

    def band_intervals(self, excise: bool = True) -> list[tuple[float, float]]:
        """Frequency intervals of the (optionally excised) receiver band."""
        return band_intervals(self.band_lo_hz, self.band_hi_hz,
                              self.excision_hz if excise else None)


def band_intervals(lo: float, hi: float, excision=None) -> list[tuple[float, float]]:
    if excision is None or excision[1] <= lo or excision[0] >= hi:
        return [(lo, hi)]
    out = []
    if excision[0] > lo:
        out.append((lo, excision[0]))
    if excision[1] < hi:
        out.append((excision[1], hi))
    return out


# --------------------------------------------------------------------------
# session geometry


@dataclass(frozen=True)
class Session:
    """One day's drift-scan observation window on the 0.25 s grid."""

    mjd_day: int
    t0_s: float
    n_slots: int
    ra0_hr: float

    @property
    def duration_s(self) -> float:
        return self.n_slots * TIME_GRID_S

    def times(self) -> np.ndarray:
        return self.t0_s + TIME_GRID_S * np.arange(self.n_slots)

    def t_of_ra(self, ra_hr):
        return self.t0_s + (np.asarray(ra_hr) - self.ra0_hr) * 3600.0 / SIDEREAL_RATE

    def contains_mjd(self, mjd: float) -> bool:
        t = (mjd - self.mjd_day) * 86400.0
        return self.t0_s <= t < self.t0_s + self.duration_s


def session_for_day(mjd_day: int, session_hours: float = 6.3,
                    site_longitude_deg: float = GREEN_BANK_LON_DEG) -> Session:
    """Session of ``mjd_day``: from LST 0 h (first grid slot) to ``session_hours``."""
    lst_midnight = mjd_to_ra(float(mjd_day), site_longitude_deg)
    wait_s = ((24.0 - lst_midnight) % 24.0) * 3600.0 / SIDEREAL_RATE
    t0 = math.ceil(wait_s / TIME_GRID_S - 1e-9) * TIME_GRID_S
    ra0 = mjd_to_ra(mjd_day + t0 / 86400.0, site_longitude_deg)
    while ra0 > 12.0:  # rounding landed just before the wrap
        t0 += TIME_GRID_S
        ra0 = mjd_to_ra(mjd_day + t0 / 86400.0, site_longitude_deg)
    n_slots = int(math.floor((session_hours - ra0) * 3600.0 / SIDEREAL_RATE / TIME_GRID_S - 1e-9)) + 1
    return Session(mjd_day, t0, n_slots, ra0)


def scenario_sessions(scenario: Scenario) -> list[Session]:
    return [session_for_day(d, scenario.session_hours, scenario.site_longitude_deg)
            for d in scenario.mjd_days]


def _locate(mjd: float, scenario: Scenario) -> tuple[Session, float] | None:
    for day in (int(math.floor(mjd)), int(math.floor(mjd)) - 1):
        if day in scenario.mjd_days:
            sess = session_for_day(day, scenario.session_hours, scenario.site_longitude_deg)
            if sess.contains_mjd(mjd):
                return sess, (mjd - day) * 86400.0
    return None


# --------------------------------------------------------------------------
# generation


def _rng(seed: int, mjd_day: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, mjd_day, stream, index]))


def sample_uniform_intervals(rng: np.random.Generator, intervals, n: int) -> np.ndarray:
    """Uniform draws over a union of disjoint intervals."""
    lo = np.array([a for a, _ in intervals])
    width = np.array([b - a for a, b in intervals])
    edges = np.concatenate([[0.0], np.cumsum(width)])
    u = rng.random(n) * edges[-1]
    k = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, len(intervals) - 1)
    return lo[k] + (u - edges[k])


def _draw_db(rng, spec, n) -> np.ndarray:
    lo, hi = _as_range(spec)
    return rng.uniform(lo, hi, n) if hi > lo else np.full(n, lo)


def _make(pol, day, t, f, snr) -> np.ndarray:
    out = empty_detections(len(t))
    out["pol"] = int(pol)
    out["mjd_day"] = day
    out["t_s"] = t
    out["freq_hz"] = f
    out["snr_db"] = snr
    return out


def noise_detections(scenario: Scenario, session: Session, pol: Pol) -> np.ndarray:
    """Pure-noise detections of one polarization for one session.

    Linear SNR above threshold is ``s_min + Exponential(1)``, the power tail
    of Rayleigh-distributed noise amplitudes.
    """
    rng = _rng(scenario.seed, session.mjd_day, _NOISE, int(pol))
    # independent Poisson counts per slot; the output comes out time ordered
    counts = rng.poisson(scenario.noise_detection_rate * TIME_GRID_S, session.n_slots)
    slots = np.repeat(np.arange(session.n_slots), counts)
    n = len(slots)
    f = sample_uniform_intervals(rng, scenario.band_intervals(scenario.excise_noise), n)
    s = threshold_linear_snr(scenario.snr_threshold_db) + rng.exponential(1.0, n)
    return _make(pol, session.mjd_day, session.t0_s + TIME_GRID_S * slots, f, linear_snr_to_db(s))


def _truncated_beam_offsets(rng, n: int, fwhm_ra_hr: float) -> np.ndarray:
    """RA offsets from the source, thinned by a truncated Gaussian beam gain."""
    half = BEAM_TRUNCATION_FWHM * fwhm_ra_hr
    sigma = fwhm_ra_hr / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    out = np.empty(0)
    while len(out) < n:
        x = rng.uniform(-half, half, 4 * (n - len(out)) + 4)
        keep = rng.random(len(x)) < np.exp(-0.5 * (x / sigma) ** 2)
        out = np.concatenate([out, x[keep]])
    return out[:n]


def _injection_pairs(scenario: Scenario, session: Session, inj: Injection, index: int):
    if inj.active_mjd_days is not None and session.mjd_day not in inj.active_mjd_days:
        return None
    n = inj.pulses_per_transit
    if n == 0:
        return None
    rng = _rng(scenario.seed, session.mjd_day, _INJECTION, index)
    fwhm = beam_fwhm_ra_hr(inj.dec_deg)
    if inj.burst_duration_s:
        # pulses clustered in one emission burst somewhere inside the beam
        centre = _truncated_beam_offsets(rng, 1, fwhm)[0]
        t_rel = rng.uniform(-0.5, 0.5, n) * inj.burst_duration_s
        offsets = centre + t_rel * SIDEREAL_RATE / 3600.0
    else:
        offsets = _truncated_beam_offsets(rng, n, fwhm)
    t_early = session.t_of_ra(inj.ra_hr + offsets)
    t_early = np.round(t_early / TIME_GRID_S) * TIME_GRID_S

    if inj.df_base_hz is not None:
        ks = np.array(inj.admissible_multiples())
        df = rng.choice([-1.0, 1.0], n) * rng.choice(ks, n) * inj.df_base_hz
        df = df + rng.normal(0.0, inj.df_jitter_hz, n) if inj.df_jitter_hz > 0 else df
    else:
        lo, hi = inj.df_range_hz
        df = rng.choice([-1.0, 1.0], n) * rng.uniform(lo, hi, n)

    intervals = scenario.band_intervals()
    centre_f = None
    if inj.burst_bandwidth_hz:
        centre_f = sample_uniform_intervals(rng, intervals, 1)[0]
    f_lhc = np.empty(n)
    for i in range(n):
        for _ in range(1000):
            if centre_f is None:
                f = sample_uniform_intervals(rng, intervals, 1)[0]
            else:
                f = centre_f + rng.uniform(-0.5, 0.5) * inj.burst_bandwidth_hz
            if _usable(f, intervals) and _usable(f - df[i], intervals):
                break
        else:
            raise ValueError("could not place injected pulse pair inside the band")
        f_lhc[i] = f
    f_rhc = f_lhc - df

    if inj.dt_s <= 0:
        t_lhc, t_rhc = t_early, t_early - inj.dt_s
    else:
        t_rhc, t_lhc = t_early, t_early + inj.dt_s
    snr_l = _draw_db(rng, inj.snr_lhc_db, n)
    snr_r = _draw_db(rng, inj.snr_rhc_db, n)
    return (_make(Pol.LHC, session.mjd_day, t_lhc, f_lhc, snr_l),
            _make(Pol.RHC, session.mjd_day, t_rhc, f_rhc, snr_r))


def _usable(f: float, intervals) -> bool:
    return any(a <= f < b for a, b in intervals)


def _burst_pairs(scenario: Scenario, session: Session, ev: EnergyBurstEvent, index: int):
    where = _locate(ev.mjd_timestamp, scenario)
    if where is None or where[0].mjd_day != session.mjd_day:
        return None
    _, t_start = where
    rng = _rng(scenario.seed, session.mjd_day, _BURST, index)
    n = ev.n_pairs
    t_early = t_start + rng.uniform(0.0, ev.duration_s, n)
    t_early = np.round(t_early / TIME_GRID_S) * TIME_GRID_S
    m = int(round(ev.dt_spread_s / TIME_GRID_S))
    dt = rng.integers(-m, m + 1, n) * TIME_GRID_S
    lo, hi = ev.df_range_hz
    df = rng.choice([-1.0, 1.0], n) * rng.uniform(lo, hi, n)
    intervals = scenario.band_intervals()
    f_lhc = sample_uniform_intervals(rng, intervals, n)
    bad = ~np.array([_usable(f, intervals) for f in f_lhc - df])
    df[bad] = -df[bad]
    t_lhc = np.where(dt <= 0, t_early, t_early + dt)
    t_rhc = t_lhc - dt
    return (_make(Pol.LHC, session.mjd_day, t_lhc, f_lhc, _draw_db(rng, ev.snr_db, n)),
            _make(Pol.RHC, session.mjd_day, t_rhc, f_lhc - df, _draw_db(rng, ev.snr_db, n)))


def _rfi_pulses(scenario: Scenario, session: Session, ev: NarrowbandRfiEvent, index: int):
    start = max((ev.start_mjd - session.mjd_day) * 86400.0, session.t0_s)
    stop = min((ev.stop_mjd - session.mjd_day) * 86400.0, session.t0_s + session.duration_s)
    if stop <= start:
        return []
    rng = _rng(scenario.seed, session.mjd_day, _RFI, index)
    t = np.arange(start, stop, ev.interval_s)
    t = np.unique(np.round(t / TIME_GRID_S) * TIME_GRID_S)
    t = t[(t >= session.t0_s) & (t < session.t0_s + session.duration_s)]
    out = []
    for name in ev.pols:
        f = ev.freq_hz + rng.uniform(-0.5, 0.5, len(t)) * ev.bandwidth_hz
        out.append(_make(Pol[name], session.mjd_day, t, f, _draw_db(rng, ev.snr_db, len(t))))
    return out


def sort_detections(det: np.ndarray) -> np.ndarray:
    """Order by (t_s, freq_hz).

    Grid times and mHz-quantized frequencies pack exactly into one int64
    key; the stable sort is then near-linear on the mostly time-ordered
    input the generator produces.
    """
    if not len(det):
        return det
    slot = np.round(det["t_s"] / TIME_GRID_S)
    mhz = np.round(det["freq_hz"] * 1e3)
    exact = np.array_equal(mhz, det["freq_hz"] * 1e3) and np.array_equal(slot * TIME_GRID_S, det["t_s"])
    if exact and slot.min() >= 0 and mhz.min() >= 0 and mhz.max() < 2**41 and slot.max() < 2**21:
        order = np.argsort(slot.astype(np.int64) * 2**41 + mhz.astype(np.int64), kind="stable")
    else:
        order = np.lexsort((det["freq_hz"], det["t_s"]))
    return det[order]


def quantize_detections(det: np.ndarray) -> np.ndarray:
    """Round to the stage-1 file precision (mHz, 1e-4 dB)."""
    det["freq_hz"] = np.round(det["freq_hz"], 3)
    det["snr_db"] = np.round(det["snr_db"], 4)
    return det


def day_detections(scenario: Scenario, session: Session) -> dict[Pol, np.ndarray]:
    """All detections of one session, per polarization, sorted by (t, f)."""
    parts: dict[Pol, list[np.ndarray]] = {Pol.LHC: [], Pol.RHC: []}
    if scenario.noise_detection_rate > 0:
        for pol in Pol:
            parts[pol].append(noise_detections(scenario, session, pol))
    for i, inj in enumerate(scenario.injections):
        got = _injection_pairs(scenario, session, inj, i)
        if got:
            parts[Pol.LHC].append(got[0])
            parts[Pol.RHC].append(got[1])
    for i, ev in enumerate(scenario.bursts):
        got = _burst_pairs(scenario, session, ev, i)
        if got:
            parts[Pol.LHC].append(got[0])
            parts[Pol.RHC].append(got[1])
    for i, ev in enumerate(scenario.rfi):
        for arr in _rfi_pulses(scenario, session, ev, i):
            parts[Pol(int(arr["pol"][0]))].append(arr)
    out = {}
    for pol, chunks in parts.items():
        det = np.concatenate(chunks) if chunks else empty_detections()
        out[pol] = sort_detections(quantize_detections(det))
    return out


def iter_day_detections(scenario: Scenario) -> Iterator[tuple[int, dict[Pol, np.ndarray]]]:
    for session in scenario_sessions(scenario):
        yield session.mjd_day, day_detections(scenario, session)


def generate_detections(scenario: Scenario, out_dir) -> list[Path]:
    """Write the stage-1 detection file set, one file per (day, polarization)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for day, per_pol in iter_day_detections(scenario):
        for pol in Pol:
            path = out_dir / detection_filename(day, pol)
            write_detections(path, per_pol[pol])
            paths.append(path)
    logger.info("wrote %d stage-1 files to %s", len(paths), out_dir)
    return paths


# --------------------------------------------------------------------------
# stage-1 file format

DETECTION_HEADER = "pol,mjd_day,t_s,freq_hz,snr_db"


def detection_filename(mjd_day: int, pol: Pol) -> str:
    return f"det_{mjd_day}_{Pol(pol).name}.csv"


def write_detections(path, det: np.ndarray) -> None:
    names = [Pol(p).name for p in range(len(Pol))]
    lines = [DETECTION_HEADER]
    lines += [
        f"{names[p]},{d},{t:.2f},{f:.3f},{s:.4f}"
        for p, d, t, f, s in zip(det["pol"].tolist(), det["mjd_day"].tolist(),
                                 det["t_s"].tolist(), det["freq_hz"].tolist(),
                                 det["snr_db"].tolist())
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_detections(path) -> np.ndarray:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != DETECTION_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    out = empty_detections(len(rows))
    if rows:
        cols = list(zip(*rows))
        try:
            out["pol"] = [Pol[p].value for p in cols[0]]
        except KeyError as exc:
            raise ValueError(f"{path}: unknown polarization {exc}") from None
        out["mjd_day"] = np.array(cols[1], dtype=np.int64)
        out["t_s"] = np.array(cols[2], dtype=float)
        out["freq_hz"] = np.array(cols[3], dtype=float)
        out["snr_db"] = np.array(cols[4], dtype=float)
    return out


# --------------------------------------------------------------------------
# closed-form coincidence oracle


def _overlap_integral(i1, i2, tau_lo: float, tau_hi: float) -> float:
    """Integral over tau in [tau_lo, tau_hi] of |i1 ∩ (i2 + tau)|."""
    (a1, b1), (a2, b2) = i1, i2

    def g(tau):
        return max(0.0, min(b1, b2 + tau) - max(a1, a2 + tau))

    knots = sorted({tau_lo, tau_hi, *[k for k in (a1 - b2, a1 - a2, b1 - b2, b1 - a2)
                                      if tau_lo < k < tau_hi]})
    # g is piecewise linear between knots, so the trapezoid rule is exact
    return sum(0.5 * (g(x0) + g(x1)) * (x1 - x0) for x0, x1 in zip(knots[:-1], knots[1:]))


def df_window_probability(intervals, df_lo: float, df_hi: float) -> float:
    """P(df_lo <= |f1 - f2| <= df_hi) for f1, f2 iid uniform on the intervals."""
    total = sum(b - a for a, b in intervals)
    acc = 0.0
    for i1 in intervals:
        for i2 in intervals:
            acc += _overlap_integral(i1, i2, df_lo, df_hi)
            acc += _overlap_integral(i1, i2, -df_hi, -df_lo)
    return acc / total**2


def expected_pair_count(rate_lhc: float, rate_rhc: float, slots_per_session: Sequence[int],
                        dt_values: Sequence[float], df_lo: float, df_hi: float,
                        intervals) -> float:
    """Expected noise pulse-pair count for a Δt set and |Δf| window.

    Detections are independent Poisson events per 0.25 s slot, so for each
    admitted Δt the count of slot pairs is ``n_slots - |Δt|/0.25`` and each
    contributes ``(r_L 0.25)(r_R 0.25) P(|Δf| in window)``. For wide Δt ranges
    and large sessions this reduces to ``r_L r_R T (2 W_t) (2 W_f / B)``.
    """
    p_df = df_window_probability(intervals, df_lo, df_hi)
    lam = rate_lhc * TIME_GRID_S * rate_rhc * TIME_GRID_S
    total = 0.0
    for n in slots_per_session:
        for dt in dt_values:
            total += max(0, n - round(abs(dt) / TIME_GRID_S))
    return total * lam * p_df


def tune_noise_rate(scenario: Scenario, dt_values=(-3.75,), df_lo: float = 80.0,
                    df_hi: float = 400.0, pairs_per_bin: float = 1.5, per_days: float = 65.0,
                    n_bins: int = 21) -> float:
    """Noise detection rate giving ``pairs_per_bin`` filtered pairs per RA bin per ``per_days``."""
    slots = [s.n_slots for s in scenario_sessions(scenario)]
    target = pairs_per_bin * n_bins * scenario.n_days / per_days
    unit = expected_pair_count(1.0, 1.0, slots, dt_values, df_lo, df_hi,
                               scenario.band_intervals(scenario.excise_noise))
    return math.sqrt(target / unit)


# --------------------------------------------------------------------------
# scenario presets

# MJD days of the anomalous Δt = -3.75 s bin-17 pairs (Fig. 4 day list)
FIG4_DAYS = (59505, 59506, 59507, 59546, 59553, 59557, 59565, 59569)


def noise_scenario(seed: int = 0, n_days: int = 143, **overrides) -> Scenario:
    """Pure noise, rate tuned to 1.5 filtered Δt = -3.75 s pairs per RA bin per 65 days."""
    base = Scenario(n_days=n_days, noise_detection_rate=1.0, seed=seed, **overrides)
    return replace(base, noise_detection_rate=tune_noise_rate(base))


def injection_scenario(seed: int = 0, n_days: int = 143, dt_s: float = -3.75,
                       days=FIG4_DAYS, **overrides) -> Scenario:
    """Noise preset plus one Δt = -3.75 s pair per listed day at RA 5.25 h."""
    inj = Injection(ra_hr=5.25, dt_s=dt_s, df_base_hz=58.575, df_jitter_hz=8.0,
                    snr_lhc_db=(14.0, 18.0), snr_rhc_db=(14.0, 18.0),
                    active_mjd_days=tuple(days), pulses_per_transit=1)
    return replace(noise_scenario(seed, n_days, **overrides), injections=(inj,))


def paper_like_scenario(seed: int = 0, n_days: int = 143, **overrides) -> Scenario:
    """Noise, both symbol injections, ten energy bursts and two RFI sources."""
    sc = injection_scenario(seed, n_days, **overrides)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB0057]))
    inj_625 = Injection(ra_hr=5.25, dt_s=-6.25, df_range_hz=(200.0, 350.0),
                        snr_lhc_db=(13.5, 17.0), snr_rhc_db=(13.5, 17.0),
                        active_mjd_days=tuple(range(59524, 59544, 2)) + (59546,),
                        pulses_per_transit=1)
    sessions = scenario_sessions(sc)
    bursts = []
    for k in rng.choice(len(sessions), size=min(10, len(sessions)), replace=False):
        s = sessions[int(k)]
        t = s.t0_s + rng.uniform(0.05, 0.95) * s.duration_s
        bursts.append(EnergyBurstEvent(mjd_timestamp=s.mjd_day + t / 86400.0,
                                       duration_s=float(rng.uniform(10, 40)),
                                       n_pairs=int(rng.integers(15, 40))))
    rfi = []
    for k in rng.choice(len(sessions), size=min(2, len(sessions)), replace=False):
        s = sessions[int(k)]
        t = s.t0_s + rng.uniform(0.1, 0.8) * s.duration_s
        f = float(np.round(rng.uniform(1435e6, 1445e6)))
        rfi.append(NarrowbandRfiEvent(freq_hz=f, start_mjd=s.mjd_day + t / 86400.0,
                                      stop_mjd=s.mjd_day + (t + 600.0) / 86400.0,
                                      snr_db=(12.2, 13.0), interval_s=1.0))
    return replace(sc, injections=sc.injections + (inj_625,), bursts=tuple(bursts),
                   rfi=tuple(rfi))


SCENARIO_PRESETS = {
    "noise": noise_scenario,
    "injection": injection_scenario,
    "paper": paper_like_scenario,
}
