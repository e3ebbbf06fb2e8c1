"""Analysis presets: one Δt/Δf matched-filter setting per figure layout."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..filters import DtSpec, FilterConfig

# panel kinds: (x column, y column)
PANELS = {
    "likelihood": ("ra_bin", "log10_likelihood"),
    "mjd": ("ra_bin", "mjd"),
    "freq": ("ra_bin", "freq_mhz"),
    "df": ("ra_bin", "df_hz"),
    "mjd_dt": ("dt_s", "mjd"),
}


@dataclass(frozen=True)
class AnalysisPreset:
    name: str
    dt_spec: DtSpec
    panels: tuple[str, ...]
    description: str
    df_abs_min_hz: float = 80.0
    df_abs_max_hz: float = 400.0
    target_bin: int = 17
    base_hz: float = 58.575
    top_n: int | None = None  # rank cut for the Δf panel
    half_range_hz: tuple[float, float] | None = None
    target_bin_only: bool = False  # panel shows the target bin's pairs only

    def __post_init__(self):
        unknown = set(self.panels) - set(PANELS)
        if unknown:
            raise ValueError(f"unknown panel kinds {sorted(unknown)}")

    def filter_config(self, base: FilterConfig = FilterConfig()) -> FilterConfig:
        return replace(base, dt_spec=self.dt_spec, df_abs_min_hz=self.df_abs_min_hz,
                       df_abs_max_hz=self.df_abs_max_hz)


_M375 = DtSpec.exact(-3.75)
_M625 = DtSpec.exact(-6.25)

PRESETS: dict[str, AnalysisPreset] = {p.name: p for p in (
    AnalysisPreset("fig2", DtSpec.abs_max(3.0), ("likelihood",),
                   "wideband |dt| <= 3 s likelihood vs RA bin"),
    AnalysisPreset("fig3", _M375, ("likelihood",), "dt = -3.75 s likelihood vs RA bin"),
    AnalysisPreset("fig4", _M375, ("mjd",), "dt = -3.75 s MJD vs RA bin"),
    AnalysisPreset("fig5", _M375, ("freq",), "dt = -3.75 s RF frequency vs RA bin"),
    AnalysisPreset("fig6", _M375, ("df",), "dt = -3.75 s df vs RA bin, highest 70", top_n=70),
    AnalysisPreset("fig7", _M625, ("likelihood",), "dt = -6.25 s likelihood vs RA bin"),
    AnalysisPreset("fig8", _M625, ("mjd",), "dt = -6.25 s MJD vs RA bin"),
    AnalysisPreset("fig9", _M625, ("freq",), "dt = -6.25 s RF frequency vs RA bin"),
    AnalysisPreset("fig10", _M625, ("df",), "dt = -6.25 s df vs RA bin, half-range test",
                   half_range_hz=(200.0, 360.0)),
    AnalysisPreset("fig11", DtSpec.abs_max(1.1), ("likelihood",),
                   "nine quantized |dt| <= 1.1 s values, likelihood vs RA bin"),
    AnalysisPreset("fig12", DtSpec.interval(-8.0, -3.0), ("mjd_dt",),
                   "dt in [-8, -3] s, MJD vs dt in the target bin", target_bin_only=True),
    AnalysisPreset("null", DtSpec.exact(3.75), ("likelihood",),
                   "dt = +3.75 s null-direction control"),
)}


def get_preset(name: str) -> AnalysisPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
