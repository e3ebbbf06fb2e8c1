"""Stage orchestration: generate -> pair search -> filters -> stats -> plots.

Every stage reads the previous stage's files from the output directory and
writes its own, so stages can also be run one at a time from the CLI.
``simulate`` runs the same stage functions in memory for Monte Carlo work.

Output layout::

    stage1/det_<day>_<pol>.csv       detections
    stage2/pairs_<day>.csv           coarse-window pulse pairs
    stage3/burst_metric.csv          burst metric per (day, RA subbin)
    stage3/filtered_<preset>.csv     matched-filter output
    analysis/likelihood_<preset>.csv
    analysis/multiplier_<preset>.json
    plots/<preset>_<panel>.svg|.csv
    manifest.json, timings.json
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..filters import (
    BurstMetricTable,
    FilterConfig,
    apply_burst_filter,
    compute_burst_metric_table,
    excise_central_if,
    hyperparameter_filter,
    prepare_detections,
    restrict_to_session,
)
from ..frontend import fft_energy_detect, synth_iq
from ..model import Pol, empty_pairs
from ..pairsearch import PAIR_HEADER, CoarseWindow, format_pair_rows, pair_filename, read_pairs, \
    search_pairs, write_pairs
from ..scenario import (
    Scenario,
    detection_filename,
    generate_detections,
    iter_day_detections,
    quantize_detections,
    read_detections,
    sort_detections,
    write_detections,
)
from ..stats import (
    LikelihoodSeries,
    half_range_concentration,
    noise_adjusted_repetition,
    ra_bin,
    ra_density_log_likelihood,
    repetition_likelihood,
    sort_pairs_desc,
    with_snr_metric,
)
from .config import PipelineConfig
from .errors import ConfigError, DataError, StageError
from .plots import ScatterSeries, emit_scatter
from .presets import PANELS, AnalysisPreset, get_preset

logger = logging.getLogger(__name__)

STAGE_DIRS = {
    "synth": "stage1",
    "detect": "stage1",
    "pair": "stage2",
    "filter": "stage3",
    "analyze": "analysis",
    "report": "plots",
}
RUN_STAGES = ("synth", "pair", "filter", "analyze", "report")
_DET_RE = re.compile(r"det_(\d+)_(LHC|RHC)\.csv$")
_PAIR_RE = re.compile(r"pairs_(\d+)\.csv$")


# --------------------------------------------------------------------------
# stage functions shared by the file and in-memory paths


def pair_day(lhc: np.ndarray, rhc: np.ndarray, filter_cfg: FilterConfig,
             coarse: CoarseWindow, site_longitude_deg: float) -> np.ndarray:
    """Stage 2 for one day: detection-level excision and IIR, then pairing."""
    return search_pairs(prepare_detections(lhc, filter_cfg), prepare_detections(rhc, filter_cfg),
                        coarse, site_longitude_deg)


def stage2_prefilter(pairs: np.ndarray, filter_cfg: FilterConfig) -> np.ndarray:
    """Pair-level excision and session restriction, before the burst table."""
    return restrict_to_session(excise_central_if(pairs, filter_cfg.if_excision_hz), filter_cfg)


def filter_preset(stage2: np.ndarray, table: BurstMetricTable, preset: AnalysisPreset,
                  filter_cfg: FilterConfig) -> np.ndarray:
    """Burst rejection with the shared table, then the preset's Δt/Δf filter."""
    cfg = preset.filter_config(filter_cfg)
    kept = apply_burst_filter(stage2, table, cfg.burst_threshold, cfg)
    return with_snr_metric(hyperparameter_filter(kept, cfg))


@dataclass
class PresetResult:
    preset: AnalysisPreset
    series: LikelihoodSeries
    multiplier: dict

    @property
    def ranked(self) -> np.ndarray:
        return self.series.pairs

    def bin_minimum(self, b: int | None = None) -> float:
        mins = self.series.bin_minimum()
        if b is None:
            return float(np.nanmin(mins)) if np.isfinite(mins).any() else 0.0
        return float(mins[b]) if np.isfinite(mins[b]) else 0.0


def multiplier_summary(series: LikelihoodSeries, preset: AnalysisPreset,
                       fft_bin_hz: float) -> dict:
    """Repetition analysis of the target bin's pairs, ranked up to its minimum.

    The top level holds the all-pairs :class:`MultiplierAnalysis` fields; the
    ``noise_adjusted`` entry drops the expected noise pairs first.
    """
    members = series.bin_members_to_minimum(preset.target_bin)
    out = {
        "preset": preset.name,
        "target_bin": preset.target_bin,
        "n_ranked": len(series),
        "n_pairs": int(len(members)),
        "last_rank": int(series.rank[members[-1]]) if len(members) else 0,
        "bin_min_log10_likelihood": (float(series.log10_likelihood[members[-1]])
                                     if len(members) else None),
    }
    if not len(members):
        out.update(corrected_likelihood=None, noise_adjusted=None)
        return out
    df = series.pairs["df_hz"][members]
    out.update(repetition_likelihood(df, preset.base_hz, fft_bin_hz).to_json())
    out["noise_adjusted"] = noise_adjusted_repetition(df, out["last_rank"], preset.base_hz,
                                                      series.n_bins, fft_bin_hz).to_json()
    if preset.half_range_hz:
        lo, hi = preset.half_range_hz
        out["half_range_hz"] = [lo, hi]
        out["half_range_concentration"] = half_range_concentration(
            df, preset.df_abs_min_hz, preset.df_abs_max_hz, lo, hi)
    return out


def analyze_preset(filtered: np.ndarray, preset: AnalysisPreset,
                   filter_cfg: FilterConfig) -> PresetResult:
    ranked = sort_pairs_desc(with_snr_metric(filtered))
    series = ra_density_log_likelihood(ranked, filter_cfg.n_ra_bins, filter_cfg.ra_bin_hr)
    return PresetResult(preset, series, multiplier_summary(series, preset, filter_cfg.fft_bin_hz))


def simulate(scenario: Scenario, presets, filter_cfg: FilterConfig = FilterConfig(),
             coarse: CoarseWindow = CoarseWindow()) -> dict[str, PresetResult]:
    """Whole pipeline in memory, no files: preset name -> result."""
    days = [pair_day(d[Pol.LHC], d[Pol.RHC], filter_cfg, coarse, scenario.site_longitude_deg)
            for _, d in iter_day_detections(scenario)]
    stage2 = stage2_prefilter(np.concatenate(days) if days else empty_pairs(), filter_cfg)
    table = compute_burst_metric_table(stage2, filter_cfg)
    out = {}
    for name in presets:
        preset = get_preset(name) if isinstance(name, str) else name
        out[preset.name] = analyze_preset(filter_preset(stage2, table, preset, filter_cfg),
                                          preset, filter_cfg)
    return out


# --------------------------------------------------------------------------
# file-based stages


def _stage_dir(out: Path, stage: str, clear: str | None = None) -> Path:
    d = out / STAGE_DIRS[stage]
    d.mkdir(parents=True, exist_ok=True)
    if clear:
        for old in d.glob(clear):  # stale outputs of an earlier run of this stage
            old.unlink()
    return d


def run_synth(cfg: PipelineConfig) -> list[Path]:
    d = _stage_dir(cfg.output_dir, "synth", clear="det_*.csv")
    return generate_detections(cfg.scenario, d)


def run_detect(cfg: PipelineConfig) -> list[Path]:
    """IQ path: synthesize the configured tones in noise and detect them."""
    if cfg.frontend is None:
        raise ConfigError("frontend: the detect stage needs a 'frontend' section")
    fe = cfg.frontend
    d = _stage_dir(cfg.output_dir, "detect", clear="det_*.csv")
    streams = synth_iq(fe.tones, fe.duration_s, cfg.seed, fe.config)
    det = quantize_detections(fft_energy_detect(streams, fe.config, fe.mjd_day, fe.t0_s))
    paths = []
    for pol in Pol:
        path = d / detection_filename(fe.mjd_day, pol)
        write_detections(path, sort_detections(det[det["pol"] == int(pol)]))
        paths.append(path)
    return paths


def _stage1_files(out: Path) -> dict[int, dict[Pol, Path]]:
    d = out / STAGE_DIRS["synth"]
    found: dict[int, dict[Pol, Path]] = {}
    for path in sorted(d.glob("det_*.csv")):
        m = _DET_RE.search(path.name)
        if m:
            found.setdefault(int(m.group(1)), {})[Pol[m.group(2)]] = path
    if not found:
        raise DataError(f"no stage-1 detection files in {d}")
    for day, pols in found.items():
        if len(pols) != 2:
            raise DataError(f"day {day}: need both LHC and RHC detection files")
    return found


def run_pair(cfg: PipelineConfig) -> list[Path]:
    files = _stage1_files(cfg.output_dir)
    d = _stage_dir(cfg.output_dir, "pair", clear="pairs_*.csv")
    paths = []
    for day in sorted(files):
        det = {}
        for pol, path in files[day].items():
            arr = read_detections(path)
            if len(arr) and np.any(arr["mjd_day"] != day):
                raise DataError(f"{path}: rows from another day")
            det[pol] = sort_detections(arr)
        pairs = pair_day(det[Pol.LHC], det[Pol.RHC], cfg.filter, cfg.coarse,
                         cfg.scenario.site_longitude_deg)
        path = d / pair_filename(day)
        write_pairs(path, pairs)
        paths.append(path)
    return paths


def read_stage2(out: Path) -> np.ndarray:
    d = out / STAGE_DIRS["pair"]
    parts = [read_pairs(p) for p in sorted(d.glob("pairs_*.csv")) if _PAIR_RE.search(p.name)]
    if not parts:
        raise DataError(f"no stage-2 pair files in {d}")
    return np.concatenate(parts)


def filtered_filename(preset: str) -> str:
    return f"filtered_{preset}.csv"


def write_filtered(path: Path, pairs: np.ndarray, cfg: FilterConfig) -> None:
    bins = ra_bin(pairs["ra_hr"], cfg.ra_bin_hr, cfg.n_ra_bins) if len(pairs) else np.zeros(0)
    extra = {"snr_metric": ("%.6f", pairs["snr_metric"]),
             "ra_bin": ("%d", np.atleast_1d(bins).astype(np.int64))}
    lines = [PAIR_HEADER + ",mjd_day,snr_metric,ra_bin"]
    lines += format_pair_rows(pairs, {"mjd_day": ("%d", pairs["mjd_day"].astype(np.int64)), **extra})
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_filtered(path: Path) -> np.ndarray:
    """Filtered-pair file back to a pair table (metric recomputed from the SNRs)."""
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header[:7] != PAIR_HEADER.split(",") or "mjd_day" not in header:
        raise DataError(f"{path}: unexpected header")
    out = empty_pairs(len(rows))
    if rows:
        values = np.array(rows, dtype=float)
        for k, name in enumerate(PAIR_HEADER.split(",")):
            out[name] = values[:, k]
        out["mjd_day"] = values[:, header.index("mjd_day")].astype(np.int64)
        out["t_s"] = np.round((out["mjd_timestamp"] - out["mjd_day"]) * 86400.0 * 4) / 4
    return with_snr_metric(out)


def write_burst_table(path: Path, table: BurstMetricTable) -> None:
    lines = ["mjd_day,ra_subbin,metric"]
    lines += [f"{d},{s},{m:.4f}" for d, s, m in zip(table.mjd_day.tolist(), table.subbin.tolist(),
                                                   table.metric.tolist())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_filter(cfg: PipelineConfig) -> list[Path]:
    stage2 = stage2_prefilter(read_stage2(cfg.output_dir), cfg.filter)
    d = _stage_dir(cfg.output_dir, "filter", clear="*.csv")
    table = compute_burst_metric_table(stage2, cfg.filter)
    paths = [d / "burst_metric.csv"]
    write_burst_table(paths[0], table)
    for name in cfg.presets:
        preset = get_preset(name)
        filtered = filter_preset(stage2, table, preset, cfg.filter)
        path = d / filtered_filename(name)
        write_filtered(path, filtered, cfg.filter)
        paths.append(path)
    return paths


def _load_filtered(cfg: PipelineConfig, name: str) -> np.ndarray:
    path = cfg.output_dir / STAGE_DIRS["filter"] / filtered_filename(name)
    if not path.exists():
        raise DataError(f"missing filtered-pair file {path}; run the filter stage first")
    return read_filtered(path)


def write_likelihood(path: Path, series: LikelihoodSeries) -> None:
    p = series.pairs
    lines = ["rank,ra_bin,log10_likelihood,mjd,freq_hz,dt_s,df_hz,snr_metric"]
    lines += [f"{r},{b},{ll:.6f},{m:.10f},{f:.3f},{dt:.2f},{df:.3f},{s:.6f}"
              for r, b, ll, m, f, dt, df, s in zip(
                  series.rank.tolist(), series.ra_bin.tolist(), series.log10_likelihood.tolist(),
                  p["mjd_timestamp"].tolist(), p["freq_hz"].tolist(), p["dt_s"].tolist(),
                  p["df_hz"].tolist(), p["snr_metric"].tolist())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _json_dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_analyze(cfg: PipelineConfig) -> list[Path]:
    d = _stage_dir(cfg.output_dir, "analyze", clear="*_*.*")
    paths = []
    for name in cfg.presets:
        result = analyze_preset(_load_filtered(cfg, name), get_preset(name), cfg.filter)
        lik = d / f"likelihood_{name}.csv"
        write_likelihood(lik, result.series)
        mult = d / f"multiplier_{name}.json"
        _json_dump(mult, result.multiplier)
        paths += [lik, mult]
    return paths


def panel_series(result: PresetResult, panel: str) -> tuple[ScatterSeries, int]:
    """Plotted points for one panel and the trials count shown with it."""
    s, p = result.series, result.preset
    cols = {
        "ra_bin": s.ra_bin,
        "log10_likelihood": s.log10_likelihood,
        "mjd": s.pairs["mjd_timestamp"],
        "freq_mhz": s.pairs["freq_hz"] / 1e6,
        "df_hz": s.pairs["df_hz"],
        "dt_s": s.pairs["dt_s"],
    }
    sel = np.ones(len(s), dtype=bool)
    if panel == "df" and p.top_n is not None:
        sel &= s.rank <= p.top_n
    if p.target_bin_only:
        sel &= s.ra_bin == p.target_bin
    x, y = PANELS[panel]
    return ScatterSeries(cols[x][sel], cols[y][sel], x, y), int(sel.sum())


def panel_annotations(result: PresetResult, panel: str) -> list[str]:
    p, m = result.preset, result.multiplier
    notes = [p.description]
    mins = result.series.bin_minimum()
    if np.isfinite(mins).any():
        b = int(np.nanargmin(mins))
        notes.append(f"min log10 likelihood {mins[b]:.3f} in RA bin {b}")
    if panel == "df" and m.get("corrected_likelihood") is not None:
        notes.append(f"bin {p.target_bin} multiplier {p.base_hz} Hz: corrected likelihood "
                     f"{m['corrected_likelihood']:.3g} (noise adjusted "
                     f"{m['noise_adjusted']['corrected_likelihood']:.3g})")
        if "half_range_concentration" in m:
            notes.append(f"half-range concentration {m['half_range_concentration']:.3g}")
    return notes


def run_report(cfg: PipelineConfig) -> list[Path]:
    d = _stage_dir(cfg.output_dir, "report", clear="*_*.*")
    paths = []
    for name in cfg.presets:
        preset = get_preset(name)
        result = analyze_preset(_load_filtered(cfg, name), preset, cfg.filter)
        for panel in preset.panels:
            series, trials = panel_series(result, panel)
            if not len(series):
                logger.warning("preset %s panel %s: nothing to plot", name, panel)
                continue
            paths += emit_scatter(series, d / f"{name}_{panel}", name, trials,
                                  panel_annotations(result, panel), title=panel)
    return paths


STAGE_FUNCS = {
    "synth": run_synth,
    "detect": run_detect,
    "pair": run_pair,
    "filter": run_filter,
    "analyze": run_analyze,
    "report": run_report,
}


# --------------------------------------------------------------------------
# end-to-end run with manifest


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def check_output_dir(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir: cannot create {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output_dir: {out} is not writable")


def run_stage(cfg: PipelineConfig, stage: str) -> list[Path]:
    """Run one stage, wrapping data failures with the stage name."""
    check_output_dir(cfg.output_dir)
    try:
        return STAGE_FUNCS[stage](cfg)
    except (ConfigError, StageError):
        raise
    except (DataError, ValueError, OSError, KeyError) as exc:
        raise StageError(stage, exc) from exc


def run_pipeline(cfg: PipelineConfig, stages=RUN_STAGES) -> dict:
    """Run the stages in order and write ``manifest.json``.

    The manifest lists every produced file with its SHA-256. When a stage
    fails, files already written by that stage are listed with
    ``valid: false``, the manifest records the failing stage, and the
    :class:`StageError` is re-raised. Wall-clock timings go to the
    ``timings.json`` sidecar so the manifest itself stays reproducible.
    """
    out = cfg.output_dir
    check_output_dir(out)
    produced: list[tuple[Path, bool]] = []
    timings = {}
    failure = None
    for stage in stages:
        t0 = time.perf_counter()
        logger.info("stage %s", stage)
        try:
            produced += [(p, True) for p in run_stage(cfg, stage)]
        except StageError as exc:
            d = out / STAGE_DIRS[stage]
            seen = {p for p, _ in produced}
            produced += [(p, False) for p in sorted(d.glob("*")) if p.is_file() and p not in seen]
            failure = exc
            break
        finally:
            timings[stage] = round(time.perf_counter() - t0, 6)

    manifest = {
        "preset": list(cfg.presets),
        "seed": cfg.seed,
        "inputs": {"config": cfg.resolved_document(), "config_sha256": cfg.document_sha256()},
        "status": "failed" if failure else "complete",
        "failed_stage": failure.stage if failure else None,
        "outputs": [{"path": p.relative_to(out).as_posix(), "sha256": sha256_file(p), "valid": ok}
                    for p, ok in sorted(produced, key=lambda t: t[0].relative_to(out).as_posix())],
        "timings": "timings.json",
    }
    _json_dump(out / "manifest.json", manifest)
    _json_dump(out / "timings.json", timings)
    if failure:
        raise failure
    return manifest
