"""Command-line front end.

Four subcommands cover the pipelines: ``spectrum`` (model squeezing
spectra), ``counts`` (Monte Carlo photon statistics with subset errors),
``traces`` (trace-file ingestion or synthetic round-trip through the
assignment chain), and ``fit`` (model fits to data files). Each takes
``--config PATH`` plus optional ``--seed``, ``--out`` and ``--threads``
overrides.

Exit codes: 0 success, 2 configuration or file-format error, 3 numerical
failure (threshold singularity, fit breakdown), 4 degenerate data.
Output files are deterministic for a fixed config and seed; wall-clock
timestamps go only to the ``run.log`` sidecar.
"""

from __future__ import annotations

import argparse
import datetime
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import TWO_PI, RunConfig
from .errors import (
    ConfigError,
    DegenerateDataError,
    FitError,
    RingSqueezeError,
    ThresholdSingularityError,
)
from .fitting import (
    fit_nrf_slope,
    fit_power_scaling,
    fit_spectrum,
    fit_variance_vs_power,
)
from .photon_stats import (
    SATURATION_THRESHOLD,
    SchmidtSpectrum,
    count_statistics,
    sample_counts,
    vardiff_and_total,
)
from .ring import gain, squeezing_spectrum
from .tes import TraceClassifier, generate_traces

logger = logging.getLogger(__name__)

DB_CONVENTION = "10*log10(variance ratio, vacuum = 1)"
_SEED_MIX = 0x9E3779B97F4A7C15  # odd increment for derived per-scale seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringsqueeze",
        description="Microring squeezer model, photon statistics, and "
                    "trace analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("spectrum", "emit model squeezing spectra"),
            ("counts", "sample photon counts and estimate statistics"),
            ("traces", "assign photon numbers to detector traces"),
            ("fit", "fit model parameters to a data file")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="config file path")
        cmd.add_argument("--seed", type=int, default=None,
                         help="64-bit seed (overrides config)")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--threads", type=int, default=None,
                         help="worker threads (0 = auto)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig(args.config)
        cfg.validate(args.command)
        seed = cfg.seed(args.seed)
        if not 0 <= seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, "
                              f"got {seed}")
        threads = cfg.threads(args.threads)
        out_dir = Path(args.out if args.out is not None
                       else cfg.get_str("run", "out", "."))
        out_dir.mkdir(parents=True, exist_ok=True)
        meta = {"producer": f"ringsqueeze {args.command}",
                "config_hash": cfg.config_hash,
                "seed": seed}
        _sidecar_log(out_dir, args, seed)
        handler = {"spectrum": cmd_spectrum, "counts": cmd_counts,
                   "traces": cmd_traces, "fit": cmd_fit}[args.command]
        handler(cfg, out_dir, seed, threads, meta)
        return 0
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ThresholdSingularityError, FitError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except DegenerateDataError as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return 4


def _sidecar_log(out_dir: Path, args, seed: int) -> None:
    stamp = datetime.datetime.now().isoformat(timespec="seconds")
    line = (f"{stamp} command={args.command} config={args.config} "
            f"seed={seed}\n")
    with (out_dir / "run.log").open("a", encoding="utf-8") as fh:
        fh.write(line)


def cmd_spectrum(cfg: RunConfig, out_dir: Path, seed: int, threads: int,
                 meta: dict) -> None:
    params = cfg.ring_params()
    drive = cfg.pump_drive(params)
    grid = cfg.sideband_grid()
    spectrum = squeezing_spectrum(params, drive, grid)
    header = dict(meta)
    header["db_convention"] = DB_CONVENTION
    header["gain"] = f"{gain(params, drive):.9g}"
    spectrum_path = out_dir / "spectrum.csv"
    points_path = out_dir / "spectrum_points.csv"
    io.write_spectrum_csv(spectrum_path, spectrum, header)
    io.write_spectrum_points_csv(points_path, spectrum, header)
    print(f"wrote {spectrum_path}")
    print(f"wrote {points_path}")


def _stats_entries(stats) -> dict:
    def fmt_values(subset_stats):
        return ",".join(f"{v:.12g}" for v in subset_stats.values)

    entries = {
        "pulses": stats.num_pulses,
        "saturated_pulses": stats.num_saturated,
        "include_saturated": str(stats.include_saturated).lower(),
        "subsets": stats.subsets,
    }
    for name, field in (("n_tot", stats.n_tot), ("vardiff", stats.vardiff),
                        ("nrf", stats.nrf), ("g2_signal", stats.g2_signal),
                        ("g2_idler", stats.g2_idler)):
        entries[f"{name}_mean"] = f"{field.mean:.12g}"
        entries[f"{name}_std"] = f"{field.std:.12g}"
        entries[f"{name}_subsets"] = fmt_values(field)
    return entries


def _derived_seed(seed: int, index: int) -> int:
    return (seed + _SEED_MIX * (index + 1)) % 2**64


def cmd_counts(cfg: RunConfig, out_dir: Path, seed: int, threads: int,
               meta: dict) -> None:
    spec = cfg.schmidt_spectrum()
    num_pulses = cfg.get_int("counts", "num_pulses", required=True)
    subsets = cfg.get_int("counts", "subsets", 8)
    include_saturated = cfg.get_bool("counts", "include_saturated", False)
    counts = sample_counts(spec, num_pulses, seed, threads)
    counts_path = out_dir / "counts.csv"
    io.write_counts_csv(counts_path, counts, meta)
    print(f"wrote {counts_path}")

    report_path = out_dir / "counts_stats.txt"
    try:
        stats = count_statistics(counts, subsets, include_saturated)
    except DegenerateDataError as exc:
        io.write_report(report_path, meta, {"error": str(exc)})
        print(f"wrote {report_path}")
        raise
    io.write_report(report_path, meta, _stats_entries(stats))
    print(f"wrote {report_path}")

    scales = cfg.get_floats("counts", "pump_scales")
    if scales:
        rows = {"pump_scale": [], "n_tot": [], "vardiff": []}
        for i, scale in enumerate(scales):
            if scale < 0:
                raise ConfigError("pump_scales must be nonnegative")
            scaled = SchmidtSpectrum(
                squeezing_parameters=tuple(scale * r for r in
                                           spec.squeezing_parameters),
                eta_signal=spec.eta_signal, eta_idler=spec.eta_idler,
                noise_mean_signal=spec.noise_mean_signal,
                noise_mean_idler=spec.noise_mean_idler)
            sub_counts = sample_counts(scaled, num_pulses,
                                       _derived_seed(seed, i), threads)
            vardiff, n_tot = vardiff_and_total(sub_counts, include_saturated)
            rows["pump_scale"].append(scale)
            rows["n_tot"].append(n_tot)
            rows["vardiff"].append(vardiff)
        scan_path = out_dir / "power_scan.csv"
        io.write_table_csv(scan_path,
                           {k: np.asarray(v) for k, v in rows.items()}, meta)
        print(f"wrote {scan_path}")


def _mixture_entries(prefix: str, classifier: TraceClassifier) -> dict:
    mixture = classifier.mixture_
    entries = {
        f"{prefix}bin_count": classifier.histogram_.bin_count,
        f"{prefix}components": mixture.component_count,
        f"{prefix}amplitudes": ",".join(
            f"{a:.9g}" for a, _, _ in mixture.components),
        f"{prefix}means": ",".join(
            f"{m:.9g}" for _, m, _ in mixture.components),
        f"{prefix}sigmas": ",".join(
            f"{s:.9g}" for _, _, s in mixture.components),
        f"{prefix}boundaries": ",".join(
            f"{b:.9g}" for b in mixture.boundaries),
        f"{prefix}tail_fraction": f"{classifier.tail_fraction_:.6g}",
    }
    return entries


def cmd_traces(cfg: RunConfig, out_dir: Path, seed: int, threads: int,
               meta: dict) -> None:
    max_components = cfg.get_int("traces", "max_components", 12)
    bins = cfg.get_int("traces", "bins", None)
    input_path = cfg.get_str("traces", "input")
    report_path = out_dir / "traces_report.txt"
    assigned_path = out_dir / "assigned_counts.csv"

    if input_path is not None:
        traces = _read_traces(cfg, input_path)
        classifier = TraceClassifier(max_components=max_components, bins=bins,
                                     sample_period=traces.sample_period)
        numbers = classifier.fit_predict(traces.traces)
        io.write_assigned_csv(assigned_path, numbers,
                              numbers > SATURATION_THRESHOLD, meta)
        entries = {"mode": "ingest", "traces": traces.num_pulses}
        entries.update(_mixture_entries("", classifier))
        io.write_report(report_path, meta, entries)
        print(f"wrote {assigned_path}")
        print(f"wrote {report_path}")
        return

    # Synthetic round trip: sample counts, render traces, recover numbers.
    for section in ("schmidt", "counts", "template"):
        if not cfg.has_section(section):
            raise ConfigError(
                f"{cfg.path}: traces command needs [traces] input or the "
                f"synthetic sections [schmidt], [counts], [template]; "
                f"missing [{section}]")
    spec = cfg.schmidt_spectrum()
    template = cfg.pulse_template()
    num_pulses = cfg.get_int("counts", "num_pulses", required=True)
    counts = sample_counts(spec, num_pulses, seed, threads)

    recovered = {}
    entries: dict = {"mode": "round_trip", "traces": num_pulses}
    wrong = np.zeros(num_pulses, dtype=bool)
    for arm in ("signal", "idler"):
        traces = generate_traces(counts, template, seed, arm=arm)
        classifier = TraceClassifier(max_components=max_components, bins=bins)
        recovered[arm] = classifier.fit_predict(traces.traces)
        wrong |= recovered[arm] != counts.arm(arm)
        entries.update(_mixture_entries(f"{arm}_", classifier))
    entries["misclassification_rate"] = f"{wrong.mean():.6g}"

    from .photon_stats import CountSet
    assigned = CountSet(
        n_signal=recovered["signal"], n_idler=recovered["idler"], seed=seed,
        saturated=(recovered["signal"] > SATURATION_THRESHOLD)
        | (recovered["idler"] > SATURATION_THRESHOLD))
    io.write_counts_csv(assigned_path, assigned, meta)
    io.write_report(report_path, meta, entries)
    print(f"wrote {assigned_path}")
    print(f"wrote {report_path}")


def _read_traces(cfg: RunConfig, input_path: str):
    path = Path(input_path)
    if not path.is_file():
        raise ConfigError(f"trace file not found: {path}")
    fmt = cfg.get_str("traces", "input_format", "auto")
    if fmt == "auto":
        with path.open("rb") as fh:
            fmt = "binary" if fh.read(4) == io.TRACE_MAGIC else "csv"
    if fmt == "binary":
        return io.read_trace_file(path)
    if fmt == "csv":
        period = cfg.get_float("traces", "sample_period_s", 1.0)
        return io.read_traces_csv(path, sample_period=period)
    raise ConfigError(
        f"{cfg.path}: [traces] input_format must be auto, binary or csv, "
        f"got {fmt!r}")


_FIT_MODES = ("spectrum", "nrf", "power", "variance_power")


def cmd_fit(cfg: RunConfig, out_dir: Path, seed: int, threads: int,
            meta: dict) -> None:
    mode = cfg.get_str("fit", "mode", required=True)
    if mode not in _FIT_MODES:
        raise ConfigError(
            f"{cfg.path}: [fit] mode must be one of {_FIT_MODES}, "
            f"got {mode!r}")
    data_path = Path(cfg.get_str("fit", "data", required=True))
    if not data_path.is_file():
        raise ConfigError(f"fit data file not found: {data_path}")
    tol = cfg.get_float("fit", "tolerance", 1e-8)
    max_iter = cfg.get_int("fit", "max_iterations", 500)

    if mode == "spectrum":
        omega, v_db, branch = io.read_spectrum_points(data_path)
        model_mode = cfg.get_str("fit", "model_mode", "locked_shifted")
        initial = {}
        if cfg.get_float("fit", "initial_gain") is not None:
            initial["g"] = cfg.get_float("fit", "initial_gain")
        if cfg.get_float("fit", "initial_eta") is not None:
            initial["eta"] = cfg.get_float("fit", "initial_eta")
        if cfg.get_float("fit", "initial_gamma_hz") is not None:
            initial["gamma"] = TWO_PI * cfg.get_float("fit", "initial_gamma_hz")
        result = fit_spectrum(omega, v_db, branch, model_mode,
                              initial=initial or None, tol=tol,
                              max_iter=max_iter)
    elif mode == "nrf":
        table = io.read_table(data_path)
        n_tot, vardiff = io.require_columns(table, ["n_tot", "vardiff"],
                                            data_path)
        result = fit_nrf_slope(n_tot, vardiff)
    elif mode == "power":
        table = io.read_table(data_path)
        power_col = "power" if "power" in table else "pump_scale"
        power, n_tot = io.require_columns(table, [power_col, "n_tot"],
                                          data_path)
        result = fit_power_scaling(power, n_tot)
    else:
        table = io.read_table(data_path)
        power, vp, vm = io.require_columns(
            table, ["power", "v_plus_db", "v_minus_db"], data_path)
        initial = {}
        if cfg.get_float("fit", "initial_eta") is not None:
            initial["eta"] = cfg.get_float("fit", "initial_eta")
        if cfg.get_float("fit", "initial_k") is not None:
            initial["k"] = cfg.get_float("fit", "initial_k")
        result = fit_variance_vs_power(power, vp, vm, initial=initial or None,
                                       tol=tol, max_iter=max_iter)

    entries: dict = {
        "mode": mode,
        "data": data_path,
        "converged": str(result.converged).lower(),
        "iterations": result.iterations,
        "residual_norm": f"{result.residual_norm:.9g}",
    }
    for name in result.names:
        entries[f"param_{name}"] = f"{result.params[name]:.9g}"
        entries[f"param_{name}_err"] = f"{result.errors[name]:.9g}"
    if "eta" in result.names:
        eta = result["eta"]
        entries["eta_near_bound"] = str(
            eta < 1e-6 or eta > 1.0 - 1e-6).lower()
    for key, value in result.details.items():
        entries[f"detail_{key}"] = value
    report_path = out_dir / "fit_report.txt"
    io.write_report(report_path, meta, entries)
    print(f"wrote {report_path}")


if __name__ == "__main__":
    sys.exit(main())
