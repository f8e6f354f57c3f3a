"""Command-line front end.

Verbs: ``run`` (scenario -> time series, spectrum, peak/fit report, figures),
``compare`` (first-order vs exact engine), ``presets`` and ``version``.
A run accepts a preset name, a JSON config file, or a previously written
manifest; re-running a manifest reproduces its outputs.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .amplitudes import EXACT, FIRST_ORDER
from .beamline import (
    MINUS,
    PLUS,
    PORT_H1,
    PORT_O,
    ConfigurationError,
    ContrastMatrix,
    ScenarioConfig,
    mean_intensity,
    propagate,
)
from .acquisition import (
    TimeGrid,
    delta_histogram,
    fold_bin_means,
    simulate_counts,
    synthesize_series,
)
from .spectral import fit_sines, magnitude_spectrum, peak_heights, preprocess
from . import plotting

DEFAULT_ANALYSIS = {"pad_factor": 8, "half_window_hz": 500.0}
DEFAULT_GRID_SETTINGS = {"sample_rate_hz": 256_000.0, "n_samples": 256}

PRESETS: dict[str, dict] = {
    "chi0": {
        "description": "constructive front loop: four beat peaks, the combined-path one doubled",
        "scenario": {},
    },
    "chipi": {
        "description": "destructive front loop: three peaks at one third height, none from the combined path",
        "scenario": {"chi_ii": math.pi},
    },
    "block-r": {
        "description": "reference beam blocked at the destructive setting",
        "scenario": {"chi_ii": math.pi, "blockers": ["R"]},
    },
    "block-i2": {
        "description": "combined path blocked: only the reference-beam peak survives",
        "scenario": {"chi_ii": math.pi, "blockers": ["I+II"]},
    },
    "premark": {
        "description": "marker ahead of the first plate; its beat is redirected to the complement port",
        "scenario": {"chi_ii": math.pi, "blockers": ["R"],
                     "premark": [83_000.0, math.pi / 9]},
        "complement_port": PORT_H1,
    },
}


# ---------------------------------------------------------------------------
# configuration plumbing


def resolve_contrast(value) -> ContrastMatrix:
    if value is None or value == "ideal":
        return ContrastMatrix.ideal()
    if value == "paper":
        return ContrastMatrix.measured()
    if isinstance(value, dict):
        return ContrastMatrix.from_mapping(value)
    path = Path(str(value))
    if path.is_file():
        return ContrastMatrix.from_mapping(json.loads(path.read_text()))
    raise ConfigurationError(
        f"contrast must be 'ideal', 'paper', a mapping, or a JSON file: {value!r}")


def scenario_from_dict(data: dict) -> tuple[str, ScenarioConfig]:
    known = {"name", "chi_ii", "chi_r", "ww_angle", "freqs_hz", "blockers",
             "engine", "normalization", "contrast", "premark", "transmissions"}
    extra = set(data) - known
    if extra:
        raise ConfigurationError(f"unknown scenario keys {sorted(extra)}")
    name = data.get("name", "custom")
    kwargs = {}
    for key in ("chi_ii", "chi_r", "ww_angle", "engine", "normalization"):
        if key in data:
            kwargs[key] = data[key]
    if "freqs_hz" in data:
        kwargs["freqs_hz"] = {k: float(v) for k, v in data["freqs_hz"].items()}
    if "blockers" in data:
        kwargs["blockers"] = frozenset(data["blockers"])
    if "premark" in data and data["premark"] is not None:
        freq, angle = data["premark"]
        kwargs["premark"] = (float(freq), float(angle))
    if "transmissions" in data:
        kwargs["transmissions"] = tuple(float(t) for t in data["transmissions"])
    kwargs["contrast"] = resolve_contrast(data.get("contrast"))
    return name, ScenarioConfig(**kwargs)


def scenario_to_dict(name: str, cfg: ScenarioConfig) -> dict:
    return {
        "name": name,
        "chi_ii": cfg.chi_ii,
        "chi_r": cfg.chi_r,
        "ww_angle": cfg.ww_angle,
        "freqs_hz": {k: float(v) for k, v in cfg.freqs_hz.items()},
        "blockers": sorted(cfg.blockers),
        "engine": cfg.engine,
        "normalization": cfg.normalization,
        "contrast": cfg.contrast.as_dict(),
        "premark": list(cfg.premark) if cfg.premark else None,
        "transmissions": list(cfg.transmissions),
    }


@dataclasses.dataclass
class RunPlan:
    """Everything a run needs, resolved from preset/file/manifest plus flags."""

    name: str
    config: ScenarioConfig
    grid: TimeGrid
    analysis: dict
    acquisition: dict | None
    complement_port: str | None
    out_dir: Path


def _load_source(source: str) -> dict:
    """Turn a preset name, config file or manifest file into config sections."""
    if source in PRESETS:
        preset = PRESETS[source]
        scenario = dict(preset["scenario"])
        scenario.setdefault("name", source)
        return {"scenario": scenario,
                "complement_port": preset.get("complement_port")}
    path = Path(source)
    if not path.is_file():
        raise ConfigurationError(
            f"unknown preset or missing config file: {source!r} "
            f"(presets: {', '.join(PRESETS)})")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON in {source}: {exc}") from exc
    if "config" in data and data.get("tool") == "tribeam":
        # a manifest written by a previous run
        scenario = dict(data["config"])
        return {
            "scenario": scenario,
            "grid": data.get("grid"),
            "acquisition": data.get("acquisition"),
            "analysis": data.get("analysis"),
            "complement_port": data.get("complement_port"),
        }
    if "scenario" not in data:
        raise ConfigurationError(f"config file {source} has no 'scenario' section")
    return data


def resolve_plan(args) -> RunPlan:
    sections = _load_source(args.source)
    scenario = dict(sections["scenario"])

    if getattr(args, "engine", None):
        scenario["engine"] = args.engine
    if getattr(args, "ideal", False):
        scenario["contrast"] = "ideal"
    elif getattr(args, "contrast", None):
        scenario["contrast"] = args.contrast

    name, config = scenario_from_dict(scenario)

    grid_settings = dict(DEFAULT_GRID_SETTINGS)
    grid_settings.update(sections.get("grid") or {})
    grid = TimeGrid(float(grid_settings["sample_rate_hz"]),
                    int(grid_settings["n_samples"]))

    analysis = dict(DEFAULT_ANALYSIS)
    analysis.update(sections.get("analysis") or {})
    if getattr(args, "pad", None):
        analysis["pad_factor"] = args.pad

    acquisition = sections.get("acquisition")
    acquisition = dict(acquisition) if acquisition else None
    if getattr(args, "counts", None):
        acquisition = acquisition or {}
        acquisition["rate_hz"] = args.counts
    if acquisition is not None:
        if getattr(args, "hours", None):
            acquisition["hours"] = args.hours
        if getattr(args, "seed", None) is not None:
            acquisition["seed"] = args.seed
        if getattr(args, "bins", None):
            acquisition["n_bins"] = args.bins
        acquisition.setdefault("hours", 24.0)
        acquisition.setdefault("seed", 0)
        acquisition.setdefault("n_bins", 64)
        if "rate_hz" not in acquisition:
            raise ConfigurationError("counting requested without a rate")

    out_dir = Path(args.out) if getattr(args, "out", None) else Path("out") / name
    return RunPlan(name, config, grid, analysis, acquisition,
                   sections.get("complement_port"), out_dir)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path: Path, header: list[str], columns) -> None:
    rows = zip(*columns)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def peaks_payload(report) -> list[dict]:
    return [
        {"target_hz": p.target_hz, "located_hz": p.located_hz,
         "height": p.height, "height_normalized": p.height_normalized}
        for p in report.peaks
    ]


def fit_payload(fit, source: str) -> dict:
    return {
        "source": source,
        "frequencies_hz": list(fit.freqs_hz),
        "amplitudes": fit.amplitudes.tolist(),
        "phases": fit.phases.tolist(),
        "amplitude_errors": fit.amplitude_errors.tolist(),
        "offset": fit.offset,
        "residual_rms": fit.residual_rms,
    }


# ---------------------------------------------------------------------------
# verbs


def cmd_run(args) -> int:
    plan = resolve_plan(args)
    cfg = plan.config
    out = plan.out_dir
    out.mkdir(parents=True, exist_ok=True)
    targets = list(cfg.analysis_targets_hz())
    pad = int(plan.analysis["pad_factor"])
    half_window = float(plan.analysis["half_window_hz"])

    iplus, iminus, delta = synthesize_series(cfg, plan.grid)
    times = plan.grid.times
    outputs = ["timeseries.csv", "spectrum.csv", "report.json", "manifest.json"]
    write_csv(out / "timeseries.csv", ["t_s", "i_plus", "i_minus", "delta_i"],
              [times, iplus.values, iminus.values, delta.values])

    spectrum = magnitude_spectrum(preprocess(delta, pad), plan.grid.sample_rate_hz)
    report = peak_heights(spectrum, targets, half_window)
    write_csv(out / "spectrum.csv", ["frequency_hz", "magnitude"],
              [spectrum.freq_bins_hz, spectrum.magnitudes])

    histogram = None
    hist_values = hist_sigmas = None
    if plan.acquisition:
        acq = plan.acquisition
        rate = float(acq["rate_hz"])
        total_time = float(acq["hours"]) * 3600.0
        histogram = simulate_counts(iplus, iminus, rate, total_time,
                                    int(acq["n_bins"]), int(acq["seed"]))
        hist_values, hist_sigmas = delta_histogram(histogram)
        write_csv(out / "histogram.csv",
                  ["bin_center_s", "counts_plus", "counts_minus",
                   "delta_rate", "sigma_rate"],
                  [histogram.bin_centers_s, histogram.counts_plus,
                   histogram.counts_minus, hist_values, hist_sigmas])
        outputs.append("histogram.csv")
        fit = fit_sines(hist_values / rate, histogram.bin_centers_s, targets,
                        sigmas=hist_sigmas / rate)
        fit_source = "counts"
    else:
        fit = fit_sines(delta.values, times, targets)
        fit_source = "series"

    complement = None
    if plan.complement_port:
        _, _, delta_c = synthesize_series(cfg, plan.grid, port=plan.complement_port)
        spec_c = magnitude_spectrum(preprocess(delta_c, pad),
                                    plan.grid.sample_rate_hz)
        complement = peak_heights(spec_c, targets, half_window)
        write_csv(out / "spectrum_complement.csv", ["frequency_hz", "magnitude"],
                  [spec_c.freq_bins_hz, spec_c.magnitudes])
        outputs.append("spectrum_complement.csv")

    means = {
        sign: mean_intensity(propagate(cfg, sign)[PORT_O], cfg.contrast,
                             cfg.engine == FIRST_ORDER)
        for sign in (PLUS, MINUS)
    }
    warnings = list(propagate(cfg, PLUS).warnings)

    payload = {
        "scenario": plan.name,
        "engine": cfg.engine,
        "normalization": cfg.normalization,
        "contrast": cfg.contrast.as_dict(),
        "mean_intensity": means,
        "peaks": {PORT_O: peaks_payload(report)},
        "fit": fit_payload(fit, fit_source),
        "warnings": warnings,
    }
    if complement is not None:
        payload["peaks"][plan.complement_port] = peaks_payload(complement)
    write_json(out / "report.json", payload)

    manifest = {
        "tool": "tribeam",
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": scenario_to_dict(plan.name, cfg),
        "grid": {"sample_rate_hz": plan.grid.sample_rate_hz,
                 "n_samples": plan.grid.n_samples},
        "analysis": {"pad_factor": pad, "half_window_hz": half_window},
        "acquisition": plan.acquisition,
        "complement_port": plan.complement_port,
        "outputs": outputs,
    }
    write_json(out / "manifest.json", manifest)

    if not args.no_figures:
        plotting.render_timeseries(times, iplus.values, iminus.values,
                                   delta.values, out / "timeseries.png")
        plotting.render_spectrum(spectrum.freq_bins_hz, spectrum.magnitudes,
                                 targets, out / "spectrum.png",
                                 title=f"{plan.name}: forward port")
        if complement is not None:
            spec_c_path = out / "spectrum_complement.png"
            plotting.render_spectrum(spec_c.freq_bins_hz, spec_c.magnitudes,
                                     targets, spec_c_path,
                                     title=f"{plan.name}: complement port")
        if histogram is not None:
            rate = float(plan.acquisition["rate_hz"])
            fold_delta = (fold_bin_means(iplus, histogram.n_bins)
                          - fold_bin_means(iminus, histogram.n_bins))
            plotting.render_histogram(histogram.bin_centers_s,
                                      hist_values / rate, hist_sigmas / rate,
                                      out / "histogram.png",
                                      overlay_times=histogram.bin_centers_s,
                                      overlay_values=fold_delta)

    print(f"run {plan.name}: wrote {len(outputs)} files to {out}")
    for peak in report.peaks:
        print(f"  {peak.target_hz / 1e3:5.1f} kHz  height {peak.height:.6f}"
              f"  normalized {peak.height_normalized:.4f}")
    for warning in warnings:
        print(f"  warning: {warning}")
    return 0


def cmd_compare(args) -> int:
    plan = resolve_plan(args)
    out = plan.out_dir
    out.mkdir(parents=True, exist_ok=True)
    targets = list(plan.config.analysis_targets_hz())
    pad = int(plan.analysis["pad_factor"])
    half_window = float(plan.analysis["half_window_hz"])

    normalized = {}
    warnings: list[str] = []
    for engine in (FIRST_ORDER, EXACT):
        cfg = dataclasses.replace(plan.config, engine=engine)
        _, _, delta = synthesize_series(cfg, plan.grid)
        spectrum = magnitude_spectrum(preprocess(delta, pad),
                                      plan.grid.sample_rate_hz)
        report = peak_heights(spectrum, targets, half_window)
        normalized[engine] = {p.target_hz: p.height_normalized
                              for p in report.peaks}
        warnings.extend(w for w in propagate(cfg, PLUS).warnings
                        if w not in warnings)

    diffs = {}
    for target in targets:
        exact = normalized[EXACT][target]
        first = normalized[FIRST_ORDER][target]
        diffs[target] = abs(exact - first) / exact if exact else 0.0
    max_diff = max(diffs.values())

    payload = {
        "scenario": plan.name,
        "marking_angle": plan.config.ww_angle,
        "normalized_heights": {engine: {str(k): v for k, v in table.items()}
                               for engine, table in normalized.items()},
        "relative_differences": {str(k): v for k, v in diffs.items()},
        "max_relative_difference": max_diff,
        "truncation_untrustworthy": bool(warnings),
        "warnings": warnings,
    }
    write_json(out / "compare.json", payload)

    print(f"compare {plan.name}: max relative peak difference {max_diff:.3%}")
    for target in targets:
        print(f"  {target / 1e3:5.1f} kHz  first-order {normalized[FIRST_ORDER][target]:.5f}"
              f"  exact {normalized[EXACT][target]:.5f}  diff {diffs[target]:.3%}")
    for warning in warnings:
        print(f"  warning: {warning}")
    return 0


def cmd_presets(args) -> int:
    for name, preset in PRESETS.items():
        print(f"{name:10s} {preset['description']}")
    return 0


def cmd_version(args) -> int:
    print(f"tribeam {__version__}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tribeam",
        description="three-beam interferometer simulator with weak path marking")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p):
        contrast = p.add_mutually_exclusive_group()
        contrast.add_argument("--ideal", action="store_true",
                              help="unit contrast between all path pairs")
        contrast.add_argument("--contrast", metavar="paper|FILE",
                              help="'paper' for the reference measured set, "
                                   "or a JSON file with i_ii/i_r/ii_r")
        p.add_argument("--engine", choices=[FIRST_ORDER, EXACT])
        p.add_argument("--pad", type=int, metavar="K",
                       help="zero-padding factor (default 8)")
        p.add_argument("--out", metavar="DIR", help="output directory")

    run = sub.add_parser("run", help="run a scenario end to end")
    run.add_argument("source", help="preset name, config JSON, or manifest JSON")
    add_common(run)
    run.add_argument("--counts", type=float, metavar="RATE",
                     help="simulate counting at this rate (counts/s at unit intensity)")
    run.add_argument("--hours", type=float, metavar="H",
                     help="total acquisition time (default 24)")
    run.add_argument("--seed", type=int, metavar="N", help="counting RNG seed")
    run.add_argument("--bins", type=int, metavar="N",
                     help="fold bins per period (default 64)")
    run.add_argument("--no-figures", action="store_true",
                     help="skip rendering PNG figures")
    run.set_defaults(func=cmd_run)

    compare = sub.add_parser("compare",
                             help="first-order vs exact engine on one scenario")
    compare.add_argument("source", help="preset name or config JSON")
    add_common(compare)
    compare.set_defaults(func=cmd_compare)

    sub.add_parser("presets", help="list scenario presets").set_defaults(
        func=cmd_presets)
    sub.add_parser("version", help="print the tool version").set_defaults(
        func=cmd_version)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValueError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
