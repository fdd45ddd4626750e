"""Command line front end.

One subcommand per experiment driver plus `validate`.  Every run reads a
sectioned config file, applies any command line overrides, executes the
driver, and writes CSVs, a JSON summary, and (unless --no-plot) rendered
figures into the output directory.

Exit codes: 0 success; 2 configuration or geometry problems; 3 a fit had
no usable answer (reported in the summary as well); 4 unwritable output.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Mapping

from . import experiments, output, report
from .config import ConfigError, ParsedRun, config_hash, load_config
from .experiments import (
    AdPosition,
    DegenerateGeometries,
    UnresolvedKink,
)
from .fitting import FitFailure
from .montecarlo import ExperimentConfig, GridTooCoarse
from .optics import InvalidGeometry, ModelMismatch, StateModel

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIT = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="whichway",
        description=(
            "Monte Carlo study of a two photon which-way setup: a remote "
            "polarization measurement, an interferometer, and the timing of "
            "the influence between them under three state models."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", required=True, help="path to the run config file")
    shared.add_argument(
        "--seed", type=int, default=None, help="override [run] master_seed"
    )
    shared.add_argument(
        "--out", default=".", help="output directory (default: current directory)"
    )
    shared.add_argument(
        "--model",
        choices=[m.value for m in StateModel],
        default=None,
        help="override [model] name",
    )
    shared.add_argument(
        "--trials", type=int, default=None, help="override [run] trials_per_point"
    )
    shared.add_argument(
        "--workers", type=int, default=None, help="override [run] workers"
    )
    shared.add_argument(
        "--plot",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="render figures next to the CSVs (default on)",
    )

    sub.add_parser(
        "whichway",
        parents=[shared],
        help="fringe contrast without the remote detectors and gated on them",
    )
    sub.add_parser(
        "kink",
        parents=[shared],
        help="visibility step against the source to interferometer path offset",
    )
    sub.add_parser(
        "qispeed",
        parents=[shared],
        help="influence speed estimates from two detector separations",
    )
    coherence = sub.add_parser(
        "coherence",
        parents=[shared],
        help="contrast with the remote arm blocker out versus in",
    )
    coherence.add_argument(
        "--ad-position",
        choices=["out", "in_arm", "both"],
        default="both",
        help="which blocker placement to run (default both)",
    )
    sub.add_parser(
        "commutation",
        parents=[shared],
        help="per port, summed, and ungated step curves with consistency checks",
    )
    validate = sub.add_parser("validate", help="parse and check a config file")
    validate.add_argument("--config", required=True, help="path to the config file")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg = replace(cfg, master_seed=args.seed)
    if args.model is not None:
        cfg = replace(cfg, model=StateModel(args.model))
    if args.trials is not None:
        try:
            cfg = replace(cfg, trials_per_point=args.trials)
        except ValueError as exc:
            raise ConfigError(f"--trials: {exc}") from None
    if args.workers is not None:
        try:
            cfg = replace(cfg, workers=args.workers)
        except ValueError as exc:
            raise ConfigError(f"--workers: {exc}") from None
    return cfg


def _figure(args: argparse.Namespace, name: str) -> str | None:
    return f"{name}.png" if args.plot else None


def _finish(
    args: argparse.Namespace,
    experiment: str,
    run_hash: str,
    seed: int,
    csvs: Mapping[str, str],
    results: Mapping[str, Any] | None,
    failure: Mapping[str, Any] | None,
    render,
) -> output.RunManifest:
    figure_name = _figure(args, experiment) if render is not None else None
    extra = (figure_name,) if figure_name else ()
    manifest = output.write_run(
        args.out, experiment, run_hash, seed, csvs, results, failure, extra
    )
    if figure_name:
        render(Path(args.out) / figure_name)
    for path in manifest.paths:
        print(f"wrote {path}")
    return manifest


def _fmt_vis(label: str, est) -> str:
    return f"{label}: V = {est.value:.4f} +/- {est.stderr:.4f}"


def _run_whichway(args: argparse.Namespace, parsed: ParsedRun) -> int:
    cfg = _apply_overrides(parsed.config, args)
    run_hash = config_hash(cfg)
    result = experiments.exp_remote_which_way(cfg)
    csvs, results = output.whichway_outputs(result)
    _finish(
        args,
        "whichway",
        run_hash,
        cfg.master_seed,
        csvs,
        results,
        None,
        lambda p: report.render_whichway(result, p),
    )
    print(_fmt_vis("no remote detectors", result.vis_alice_removed))
    print(_fmt_vis("gated on transmitted port", result.vis_alice_first))
    if result.conditional_atd is not None:
        print(f"click frequency per transmitted-port event: {result.conditional_atd:.4f}")
    return EXIT_OK


def _run_kink(args: argparse.Namespace, parsed: ParsedRun) -> int:
    cfg = _apply_overrides(parsed.config, args)
    run_hash = config_hash(cfg)
    try:
        result = experiments.exp_kink(cfg)
    except FitFailure as exc:
        _finish(
            args,
            "kink",
            run_hash,
            cfg.master_seed,
            {},
            None,
            {"reason": exc.reason, "message": str(exc), "info": exc.info},
            None,
        )
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    csvs, results = output.kink_outputs(result)
    _finish(
        args,
        "kink",
        run_hash,
        cfg.master_seed,
        csvs,
        results,
        None,
        lambda p: report.render_kink(result, p),
    )
    print(
        f"threshold at {result.fit.center:.4f} +/- {result.fit.center_se:.4f} m, "
        f"width {result.fit.width:.4f} +/- {result.fit.width_se:.4f} m "
        f"(predicted center {result.predicted_center:.4f} m)"
    )
    return EXIT_OK


def _run_qispeed(args: argparse.Namespace, parsed: ParsedRun) -> int:
    cfg = _apply_overrides(parsed.config, args)
    if parsed.dist_a_to_b_alt is None:
        raise ConfigError(
            "qispeed needs [geometry] dist_a_to_b_alt for the second separation"
        )
    geometry_1 = cfg.geometry
    geometry_2 = replace(cfg.geometry, dist_a_to_b=parsed.dist_a_to_b_alt)
    run_hash = config_hash(cfg, dist_a_to_b_alt=parsed.dist_a_to_b_alt)
    try:
        result = experiments.exp_qi_speed(cfg, geometry_1, geometry_2)
    except UnresolvedKink as exc:
        _finish(
            args,
            "qispeed",
            run_hash,
            cfg.master_seed,
            {},
            None,
            {"reason": "unresolved_kink", "message": str(exc), "info": {}},
            None,
        )
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    csvs, results = output.qispeed_outputs(result)
    _finish(
        args,
        "qispeed",
        run_hash,
        cfg.master_seed,
        csvs,
        results,
        None,
        lambda p: report.render_qispeed(result, p),
    )
    if result.v_qi_single is not None:
        print(
            f"single-separation estimate: {result.v_qi_single:.3f} "
            f"+/- {result.v_qi_single_se:.3f} c"
        )
    if result.v_qi_diff is not None:
        print(
            f"difference estimate: {result.v_qi_diff:.3f} "
            f"+/- {result.v_qi_diff_se:.3f} c"
        )
    print(f"lower bound: {result.v_qi_min_bound:.3f} c")
    return EXIT_OK


def _run_coherence(args: argparse.Namespace, parsed: ParsedRun) -> int:
    cfg = _apply_overrides(parsed.config, args)
    run_hash = config_hash(cfg)
    position = None if args.ad_position == "both" else AdPosition(args.ad_position)
    result = experiments.exp_coherence_test(cfg, position)
    csvs, results = output.coherence_outputs(result)
    _finish(
        args,
        "coherence",
        run_hash,
        cfg.master_seed,
        csvs,
        results,
        None,
        lambda p: report.render_coherence(result, p),
    )
    if result.vis_case_open is not None:
        print(_fmt_vis("blocker out", result.vis_case_open))
    if result.vis_case_blocked is not None:
        print(_fmt_vis("blocker in arm", result.vis_case_blocked))
    return EXIT_OK


def _run_commutation(args: argparse.Namespace, parsed: ParsedRun) -> int:
    cfg = _apply_overrides(parsed.config, args)
    run_hash = config_hash(cfg)
    result = experiments.exp_commutation(cfg)
    csvs, results = output.commutation_outputs(result)
    _finish(
        args,
        "commutation",
        run_hash,
        cfg.master_seed,
        csvs,
        results,
        None,
        lambda p: report.render_commutation(result, p),
    )
    print(f"port curves consistent: {result.tr_curves_consistent}")
    print(f"summed curve consistent: {result.sum_curve_consistent}")
    print(f"step without gating: {result.kink_without_coincidence}")
    return EXIT_OK


def _run_validate(args: argparse.Namespace, parsed: ParsedRun) -> int:
    run_hash = config_hash(
        parsed.config, dist_a_to_b_alt=parsed.dist_a_to_b_alt
    )
    print(f"ok {run_hash}")
    return EXIT_OK


_COMMANDS = {
    "whichway": _run_whichway,
    "kink": _run_kink,
    "qispeed": _run_qispeed,
    "coherence": _run_coherence,
    "commutation": _run_commutation,
    "validate": _run_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        parsed = load_config(args.config)
        return _COMMANDS[args.command](args, parsed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        GridTooCoarse,
        InvalidGeometry,
        DegenerateGeometries,
        ModelMismatch,
        ValueError,
    ) as exc:
        print(f"invalid run: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitFailure, UnresolvedKink) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except output.IoError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
