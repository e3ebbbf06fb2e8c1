"""Shared record types and the Rayleigh/Ricean amplitude statistics.

Bulk data moves between stages as numpy structured arrays
(:data:`DETECTION_DTYPE`, :data:`PAIR_DTYPE`); the frozen dataclasses are the
single-record view of the same fields.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import special

#: Timestamp grid of the detection stream, seconds.
TIME_GRID_S = 0.25
#: Absolute tolerance for "is on the 0.25 s grid".
GRID_TOL_S = 1e-9
#: Default (S+N)/N detection threshold, dB.
SNR_THRESHOLD_DB = 11.8
#: FFT bin width of the energy detector, Hz.
FFT_BIN_HZ = 3.725

LOG10_E = math.log10(math.e)


class Pol(enum.IntEnum):
    LHC = 0
    RHC = 1


DETECTION_DTYPE = np.dtype(
    [
        ("pol", "i1"),
        ("mjd_day", "i4"),
        ("t_s", "f8"),
        ("freq_hz", "f8"),
        ("snr_db", "f8"),
    ]
)

# t_s is the earlier pulse's seconds-within-day; it is kept next to the
# fractional mjd_timestamp so cell/time arithmetic stays exact.
PAIR_DTYPE = np.dtype(
    [
        ("mjd_day", "i4"),
        ("t_s", "f8"),
        ("mjd_timestamp", "f8"),
        ("ra_hr", "f8"),
        ("dt_s", "f8"),
        ("df_hz", "f8"),
        ("freq_hz", "f8"),
        ("snr_lhc_db", "f8"),
        ("snr_rhc_db", "f8"),
        ("snr_metric", "f8"),
    ]
)


@dataclass(frozen=True)
class Detection:
    """One above-threshold spectral pulse in one circular polarization."""

    pol: Pol
    mjd_day: int
    t_s: float
    freq_hz: float
    snr_db: float


@dataclass(frozen=True)
class PulsePair:
    """An LHC/RHC detection pair.

    ``dt_s`` is the LHC arrival time minus the RHC arrival time and ``df_hz``
    the LHC frequency minus the RHC frequency. ``mjd_timestamp`` and
    ``ra_hr`` refer to the earlier of the two pulses.
    """

    mjd_day: int
    t_s: float
    mjd_timestamp: float
    ra_hr: float
    dt_s: float
    df_hz: float
    freq_hz: float
    snr_lhc_db: float
    snr_rhc_db: float
    snr_metric: float = float("nan")


@dataclass(frozen=True)
class ToneModel:
    """Tone amplitudes per polarization in units of the noise sigma."""

    nu_lhc: float = 0.0
    nu_rhc: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.nu_lhc < 0 or self.nu_rhc < 0:
            raise ValueError("tone amplitudes must be >= 0")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")


def empty_detections(n: int = 0) -> np.ndarray:
    return np.zeros(n, dtype=DETECTION_DTYPE)


def empty_pairs(n: int = 0) -> np.ndarray:
    out = np.zeros(n, dtype=PAIR_DTYPE)
    out["snr_metric"] = np.nan
    return out


def detections_from_records(records) -> np.ndarray:
    records = list(records)
    out = empty_detections(len(records))
    for i, d in enumerate(records):
        out[i] = (int(d.pol), d.mjd_day, d.t_s, d.freq_hz, d.snr_db)
    return out


def detections_to_records(arr: np.ndarray) -> list[Detection]:
    return [
        Detection(Pol(int(r["pol"])), int(r["mjd_day"]), float(r["t_s"]),
                  float(r["freq_hz"]), float(r["snr_db"]))
        for r in arr
    ]


def pairs_to_records(arr: np.ndarray) -> list[PulsePair]:
    names = [f.name for f in fields(PulsePair)]
    out = []
    for r in arr:
        vals = {n: r[n].item() for n in names}
        vals["mjd_day"] = int(vals["mjd_day"])
        out.append(PulsePair(**vals))
    return out


def pairs_from_records(records) -> np.ndarray:
    records = list(records)
    out = empty_pairs(len(records))
    names = PAIR_DTYPE.names
    for i, p in enumerate(records):
        out[i] = tuple(getattr(p, n) for n in names)
    return out


def on_time_grid(t_s, grid_s: float = TIME_GRID_S, tol: float = GRID_TOL_S) -> np.ndarray:
    t = np.asarray(t_s, dtype=float)
    return np.abs(t - np.round(t / grid_s) * grid_s) <= tol


# --------------------------------------------------------------------------
# SNR conversions


def db_to_linear_snr(snr_db):
    """Convert a measured (S+N)/N in dB to a linear S/N.

    Returns ``10**(snr_db/10) - 1``; negative for inputs below 0 dB.
    """
    out = np.power(10.0, np.asarray(snr_db, dtype=float) / 10.0) - 1.0
    return out if out.ndim else float(out)


def linear_snr_to_db(snr):
    """Inverse of :func:`db_to_linear_snr`."""
    out = 10.0 * np.log10(1.0 + np.asarray(snr, dtype=float))
    return out if out.ndim else float(out)


def threshold_linear_snr(snr_threshold_db: float = SNR_THRESHOLD_DB) -> float:
    return db_to_linear_snr(snr_threshold_db)


# --------------------------------------------------------------------------
# Rayleigh / Rice


def log_i0(x):
    """ln I0(x), overflow free: ln(i0e(x)) + |x|."""
    x = np.asarray(x, dtype=float)
    return np.log(special.i0e(x)) + np.abs(x)


def rician_log_pdf(amplitude, nu, sigma=1.0):
    """Natural log of the Rice amplitude density.

    ``ln[(a/sigma**2) exp(-(a**2 + nu**2)/(2 sigma**2)) I0(a nu / sigma**2)]``.
    With ``nu == 0`` this is the Rayleigh density. Returns ``-inf`` at a = 0.

    Raises
    ------
    ValueError
        If any amplitude is negative or sigma is not positive.
    """
    a = np.asarray(amplitude, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(a < 0):
        raise ValueError("amplitude must be >= 0")
    if np.any(np.asarray(sigma) <= 0):
        raise ValueError("sigma must be > 0")
    if np.any(nu < 0):
        raise ValueError("nu must be >= 0")
    s2 = np.asarray(sigma, dtype=float) ** 2
    with np.errstate(divide="ignore"):
        out = np.log(a / s2) - (a * a + nu * nu) / (2.0 * s2) + log_i0(a * nu / s2)
    return out if out.ndim else float(out)


def snr_db_to_amplitude(snr_db, sigma=1.0):
    """Envelope amplitude in sigma units for a measured (S+N)/N in dB.

    Uses ``a = sqrt(2 sigma**2 S/N)``.
    """
    s = np.asarray(db_to_linear_snr(snr_db))
    if np.any(s < 0):
        raise ValueError("linear SNR must be >= 0")
    out = np.sqrt(2.0 * sigma**2 * s)
    return out if out.ndim else float(out)


def db_amplitude_log_jacobian(snr_db, sigma=1.0):
    """ln |da/dx| for the dB -> amplitude map of :func:`snr_db_to_amplitude`."""
    x = np.asarray(snr_db, dtype=float)
    a = np.asarray(snr_db_to_amplitude(x, sigma))
    with np.errstate(divide="ignore"):
        out = np.log(sigma**2 * math.log(10.0) / 10.0) + x * math.log(10.0) / 10.0 - np.log(a)
    return out if out.ndim else float(out)


def marginal_db_log_pdf(snr_db, nu, sigma=1.0):
    """ln density of one polarization's measured SNR, in dB units."""
    x = np.asarray(snr_db, dtype=float)
    a = np.asarray(snr_db_to_amplitude(x, sigma))
    s2 = sigma**2
    # a/sigma^2 from the Rice density cancels the 1/a of the Jacobian, which
    # keeps the 0 dB limit finite
    out = (
        math.log(math.log(10.0) / 10.0) + x * math.log(10.0) / 10.0
        - (a * a + nu * nu) / (2.0 * s2) + log_i0(a * nu / s2)
    )
    return out if out.ndim else float(out)


def joint_polarized_log10_pdf(snr_lhc_db, snr_rhc_db, tones: ToneModel):
    """log10 joint density of the two polarizations' measured SNR (dB).

    Polarizations are independent Rice marginals, each transformed from
    amplitude to the dB variable including the Jacobian.
    """
    lhc = marginal_db_log_pdf(snr_lhc_db, tones.nu_lhc, tones.sigma)
    rhc = marginal_db_log_pdf(snr_rhc_db, tones.nu_rhc, tones.sigma)
    out = (np.asarray(lhc) + np.asarray(rhc)) / math.log(10.0)
    return out if out.ndim else float(out)
