"""
Command line entry point for the diffusion maps toolkit.
Generates datasets, runs analyses and sweeps, and prints saved reports.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import ValidationError

from dmaps.config import get_settings
from dmaps.errors import ConfigError, DmapsError
from dmaps.export import ResultExporter, load_dataset, load_report
from dmaps.models import AnalysisReport, Metric, ObservationKind, PipelineConfig, SelectionCriterion
from dmaps.pipeline import DATASET_KINDS, generate_dataset, run_analysis
from dmaps.presets import get_preset, list_presets
from dmaps.sweep import DEFAULT_LAMBDAS, DEFAULT_T_OBS, dimensionality_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 2

# argparse dest -> generator parameter
GENERATOR_ARGS = ("l1", "l2", "m", "density", "h", "theta_min", "theta_max", "r1", "r2",
                  "switch_rate", "speed", "t_max", "dt", "n_cells", "runs", "n_bins", "random_p")

# model field -> flag shown in error messages
FIELD_FLAGS = {
    "l1": "--l1", "l2": "--l2", "m": "--m", "density": "--density", "h": "--h",
    "theta_min": "--theta-min", "theta_max": "--theta-max", "r1": "--r1", "r2": "--r2",
    "switch_rate": "--lambda", "speed": "--speed", "t_max": "--tmax", "dt": "--dt",
    "n_cells": "--cells", "runs": "--runs", "n_bins": "--bins", "p_right": "--random-p",
    "metric": "--metric", "alpha": "--alpha", "epsilon": "--epsilon", "num_eigen": "--num-eigen",
    "tau": "--tau", "threshold": "--threshold", "top_d": "--top-d", "equivalence_pairs": "--pairs",
    "eigen_solver": "--solver", "loocv_method": "--loocv", "ridge": "--ridge",
}


def _float_list(text: str) -> List[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values or any(value <= 0 for value in values):
        raise argparse.ArgumentTypeError(f"expected positive numbers, got {text!r}")
    return values


def _describe_validation(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        field = str(error["loc"][0]) if error["loc"] else ""
        flag = FIELD_FLAGS.get(field, field or "input")
        parts.append(f"{flag}: {error['msg']}")
    return "invalid value for " + "; ".join(parts)


# ============================================================================
# PARSER
# ============================================================================

def _add_generator_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("dataset parameters")
    group.add_argument("--l1", type=float, help="strip long side")
    group.add_argument("--l2", type=float, help="strip short side")
    group.add_argument("--m", type=int, help="number of points")
    group.add_argument("--density", choices=["uniform", "gaussian_in_z1"], help="strip sampling density")
    group.add_argument("--h", type=float, help="Swiss roll height")
    group.add_argument("--theta-min", dest="theta_min", type=float, help="Swiss roll inner angle")
    group.add_argument("--theta-max", dest="theta_max", type=float, help="Swiss roll outer angle")
    group.add_argument("--r1", type=float, help="torus outer radius")
    group.add_argument("--r2", type=float, help="torus inner radius")
    group.add_argument("--lambda", dest="switch_rate", type=float, help="velocity switching rate")
    group.add_argument("--speed", type=float, help="cell speed s")
    group.add_argument("--tmax", dest="t_max", type=float, help="simulated time")
    group.add_argument("--dt", type=float, help="snapshot interval")
    group.add_argument("--cells", dest="n_cells", type=int, help="cells per simulation (env DMAPS_N_CELLS)")
    group.add_argument("--runs", type=int, help="simulations per ensemble (env DMAPS_N_RUNS)")
    group.add_argument("--bins", dest="n_bins", type=int, help="histogram bins (env DMAPS_N_BINS)")
    group.add_argument("--random-p", dest="random_p", action="store_true", default=None,
                       help="draw initial p uniformly from [0.1, 0.9] instead of spacing it evenly")


def _add_analysis_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("analysis parameters")
    group.add_argument("--metric", choices=[metric.value for metric in Metric])
    group.add_argument("--alpha", type=float, help="density normalization in [0, 1] (env DMAPS_ALPHA)")
    group.add_argument("--epsilon", type=float, help="fixed kernel scale (default: median pairwise distance)")
    group.add_argument("--num-eigen", dest="num_eigen", type=int, help="eigenpairs to compute (env DMAPS_NUM_EIGEN)")
    group.add_argument("--tau", type=int, help="diffusion time")
    group.add_argument("--threshold", type=float, help="unique if r_k exceeds this (env DMAPS_THRESHOLD)")
    group.add_argument("--top-d", dest="top_d", type=int, help="select the d largest residuals instead")
    group.add_argument("--solver", dest="eigen_solver", choices=["arpack", "dense"])
    group.add_argument("--loocv", dest="loocv_method", choices=["direct", "hat"])
    group.add_argument("--ridge", type=float, help="trace-scaled ridge on the local slopes (env DMAPS_RIDGE)")
    group.add_argument("--pairs", dest="equivalence_pairs", type=int, help="pairs sampled by the equivalence check")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="dmaps", description="Diffusion maps with repeated-eigendirection detection")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--n-jobs", dest="n_jobs", type=int, default=settings.n_jobs,
                        help="parallel workers (CLI > env:DMAPS_N_JOBS > default)")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="write a synthetic or chemotaxis dataset")
    generate.add_argument("kind", nargs="?", choices=DATASET_KINDS)
    generate.add_argument("--preset", help="named parameter set (see `dmaps presets`)")
    generate.add_argument("--seed", type=int, default=settings.seed)
    generate.add_argument("--out", default=settings.data_dir, help="output directory")
    generate.add_argument("--name", help="file stem (default: preset name or kind)")
    _add_generator_flags(generate)

    analyze = sub.add_parser("analyze", help="run the diffusion maps analysis on a dataset")
    analyze.add_argument("dataset", nargs="?", help="dataset CSV")
    analyze.add_argument("--preset", help="generate the named dataset and analyse it")
    analyze.add_argument("--seed", type=int, default=settings.seed)
    analyze.add_argument("--out", default=settings.output_dir, help="output directory")
    analyze.add_argument("--name", help="file stem (default: dataset or preset name)")
    _add_analysis_flags(analyze)

    sweep = sub.add_parser("sweep", help="dimensionality ratio over a (lambda, t_obs) grid")
    sweep.add_argument("--preset", help="named sweep grid")
    sweep.add_argument("--lambdas", type=_float_list, help="comma-separated switching rates")
    sweep.add_argument("--t-obs", dest="t_obs", type=_float_list, help="comma-separated observation time scales")
    sweep.add_argument("--replicates", type=int)
    sweep.add_argument("--cells", dest="n_cells", type=int)
    sweep.add_argument("--runs", type=int)
    sweep.add_argument("--bins", dest="n_bins", type=int)
    sweep.add_argument("--seed", type=int, default=settings.seed)
    sweep.add_argument("--out", default=settings.output_dir, help="output directory")
    sweep.add_argument("--name", default="sweep", help="file stem")
    _add_analysis_flags(sweep)

    report = sub.add_parser("report", help="print a saved analysis report")
    report.add_argument("report", help="report JSON written by `analyze`")

    sub.add_parser("presets", help="list named parameter sets")
    return parser


# ============================================================================
# HELPERS
# ============================================================================

def _generator_params(args: argparse.Namespace, base: Optional[Dict] = None) -> Dict:
    settings = get_settings()
    params = dict(base or {})
    if getattr(args, "kind", None) == "chemotaxis" and base is None:
        params.update({"n_cells": settings.n_cells, "runs": settings.n_runs, "n_bins": settings.n_bins})
    for name in GENERATOR_ARGS:
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    return params


def pipeline_config(args: argparse.Namespace, preset_analysis: Optional[Dict] = None) -> PipelineConfig:
    """Settings, then preset analysis values, then explicit flags"""
    settings = get_settings()
    values = {
        "alpha": settings.alpha,
        "num_eigen": settings.num_eigen,
        "tau": settings.tau,
        "eigen_solver": settings.eigen_solver,
        "loocv_method": settings.loocv_method,
        "ridge": settings.ridge,
        "equivalence_pairs": settings.equivalence_pairs,
        "seed": args.seed,
    }
    values.update(preset_analysis or {})
    for name in ("metric", "alpha", "epsilon", "num_eigen", "tau", "eigen_solver", "loocv_method", "ridge",
                 "equivalence_pairs"):
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value

    if getattr(args, "top_d", None) is not None:
        values["selection"] = SelectionCriterion.by_count(args.top_d)
    else:
        threshold = args.threshold if getattr(args, "threshold", None) is not None else settings.threshold
        values["selection"] = SelectionCriterion.by_threshold(threshold)
    return PipelineConfig(**values)


def format_report(report: AnalysisReport) -> str:
    """Human-readable summary of an analysis report"""
    lines = []
    unit = " (distances in histogram bins)" if report.metric == Metric.EMD else ""
    lines.append(f"Dataset: {report.dataset_kind}   metric: {report.metric.value}{unit}")
    lines.append(f"alpha={report.alpha:g}  epsilon={report.epsilon:.6g}  tau={report.tau}  "
                 f"criterion={report.residuals.criterion}")
    lines.append("")
    lines.append(f"{'k':>4} {'mu_k':>14} {'r_k':>10}  unique")
    unique = set(report.unique_indices)
    for k in range(1, len(report.spectrum)):
        marker = "*" if k in unique else ""
        lines.append(f"{k:>4} {report.spectrum[k]:>14.8f} {report.residuals.residual(k):>10.4f}  {marker}")
    lines.append("")
    lines.append(f"Detected dimensionality: {len(report.unique_indices)} (unique indices {report.unique_indices})")

    if report.relative_lengths:
        lengths = ", ".join(f"{value:.4g}" for value in report.relative_lengths)
        lines.append(f"Relative lengths: {lengths}")
        if len(report.relative_lengths) >= 2:
            lines.append(f"Length ratio L1/L2: {report.relative_lengths[0] / report.relative_lengths[1]:.4g}")
    else:
        lines.append("Relative lengths: n/a")

    if report.dimensionality_ratio is not None:
        note = " (top-2 residual fallback)" if report.ratio_from_fallback else ""
        lines.append(f"Dimensionality ratio: {report.dimensionality_ratio:.4g}{note}")
    else:
        lines.append("Dimensionality ratio: n/a")

    if report.correlations is not None:
        c = report.correlations
        lines.append(f"Correlations: |corr_p|={c.corr_p:.3f} (phi_{c.assignment['p']}), "
                     f"|corr_t|={c.corr_t:.3f} (phi_{c.assignment['t']})")
    else:
        lines.append("Correlations: n/a")

    eq = report.equivalence
    status = "holds" if eq.holds else "FAILS"
    lines.append(f"Equivalence check: {status} (worst slack {eq.worst_slack:.3g}, K_est {eq.k_est:.3g}, "
                 f"{eq.pairs_checked} pairs)")
    for message in report.warnings:
        lines.append(f"Warning: {message}")
    p = report.provenance
    lines.append(f"Provenance: config {p.config_hash}, dataset {p.dataset_hash}, seed {p.seed}")
    return "\n".join(lines)


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_generate(args: argparse.Namespace) -> int:
    if args.preset:
        preset = get_preset(args.preset)
        if preset["kind"] == "sweep":
            raise ConfigError(f"Preset {args.preset!r} is a sweep; use `dmaps sweep --preset`")
        kind, params = preset["kind"], _generator_params(args, preset["params"])
    elif args.kind:
        kind, params = args.kind, _generator_params(args)
    else:
        raise ConfigError("generate needs a dataset kind or --preset")

    dataset = generate_dataset(kind, params, seed=args.seed, n_jobs=args.n_jobs)
    paths = ResultExporter(args.out).export_dataset(dataset, args.name or args.preset or kind)
    print(f"{paths['csv']}\n{paths['json']}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    exporter = ResultExporter(args.out)
    if args.preset:
        preset = get_preset(args.preset)
        if preset["kind"] == "sweep":
            raise ConfigError(f"Preset {args.preset!r} is a sweep; use `dmaps sweep --preset`")
        dataset = generate_dataset(preset["kind"], preset["params"], seed=args.seed, n_jobs=args.n_jobs)
        name = args.name or args.preset
        exporter.export_dataset(dataset, f"{name}_dataset")
        config = pipeline_config(args, preset["analysis"])
    elif args.dataset:
        dataset = load_dataset(args.dataset)
        name = args.name or Path(args.dataset).stem
        default_metric = {"metric": "emd"} if dataset.observations.kind == ObservationKind.HISTOGRAMS else {}
        config = pipeline_config(args, default_metric)
    else:
        raise ConfigError("analyze needs a dataset path or --preset")

    outcome = run_analysis(dataset, config, n_jobs=args.n_jobs, warn_size=get_settings().loocv_warn_size)
    paths = exporter.export_analysis(outcome, name)
    for path in paths.values():
        print(path)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = get_settings()
    params = {
        "lambdas": list(DEFAULT_LAMBDAS),
        "t_obs_values": list(DEFAULT_T_OBS),
        "replicates": 3,
        "n_cells": settings.n_cells,
        "runs": settings.n_runs,
        "n_bins": settings.n_bins,
    }
    analysis = {"metric": "emd"}
    if args.preset:
        preset = get_preset(args.preset)
        if preset["kind"] != "sweep":
            raise ConfigError(f"Preset {args.preset!r} is not a sweep")
        params.update(preset["params"])
        analysis.update(preset["analysis"])
    overrides = {"lambdas": args.lambdas, "t_obs_values": args.t_obs, "replicates": args.replicates,
                 "n_cells": args.n_cells, "runs": args.runs, "n_bins": args.n_bins}
    params.update({key: value for key, value in overrides.items() if value is not None})

    config = pipeline_config(args, analysis)
    grid = dimensionality_sweep(config=config, seed=args.seed, n_jobs=args.n_jobs, **params)
    paths = ResultExporter(args.out).export_sweep(grid, args.name)
    for path in paths.values():
        print(path)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    print(format_report(load_report(args.report)))
    return EXIT_OK


def cmd_presets(args: argparse.Namespace) -> int:
    for preset in list_presets():
        print(f"{preset['name']:<24} {preset['kind']:<11} {preset['description']}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "report": cmd_report,
    "presets": cmd_presets,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else getattr(logging, get_settings().log_level.upper(), logging.INFO)
    logging.basicConfig(level=level)

    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {_describe_validation(exc)}", file=sys.stderr)
    except DmapsError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
