"""Command-line interface: single-shot queries, figure sweeps, manifests.

Commands

* ``leris localize``    - position/orientation fix for one user pose
* ``leris link-budget`` - best cascaded route and rate for one user pose
* ``leris figure``      - fig2 / fig3 / fig4 sweeps to CSV plus manifest

Reports are JSON on stdout; failures print a machine-readable JSON object
on stderr and exit with a code identifying the error class.  Every run
emits a manifest: embedded in the report for query commands, written as
``manifest.json`` next to the CSV for figure runs (and also embedded).

The deterministic noise modes ('fixed', 'literal') add a receiver constant
that the ranging stage subtracts exactly, so they reproduce the noise-free
fix; 'stochastic' noise is irreducible and can legitimately fail ranging.
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config as config_mod, kernels, mmwave, routing, sweeps
from .errors import ConfigError, SimulationError
from .geometry import angle_between
from .localization import localize
from .montecarlo import substream
from .scenario import build_scenario, synthesize_measurements


def _add_common(parser):
    parser.add_argument("--config", help="JSON scenario configuration file")
    parser.add_argument("--seed", type=int, help="override sampling.seed")
    parser.add_argument("--workers", type=int, help="override sampling.workers")
    parser.add_argument("--iterations", type=int,
                        help="override figures.iterations")
    parser.add_argument("--noise-mode",
                        choices=["literal", "fixed", "stochastic", "off"],
                        help="override optical.noise_mode")
    parser.add_argument("--quadrature-deg", type=float,
                        help="override quadrature step (query and figure)")
    parser.add_argument("--out", help="output directory (manifest, CSV)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="leris",
        description="Optical localization and cascaded reflecting-surface "
                    "mmWave link simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_loc = sub.add_parser("localize", help="single-pose position fix")
    p_loc.add_argument("--ue", nargs=3, type=float, required=True,
                       metavar=("X", "Y", "Z"), help="true user position, m")
    p_loc.add_argument("--azimuth-deg", type=float, required=True,
                       help="user facing azimuth, degrees")
    _add_common(p_loc)

    p_lb = sub.add_parser("link-budget", help="best route and rate for a pose")
    p_lb.add_argument("--ue", nargs=3, type=float, required=True,
                      metavar=("X", "Y", "Z"))
    p_lb.add_argument("--azimuth-deg", type=float, required=True)
    _add_common(p_lb)

    p_fig = sub.add_parser("figure", help="run a figure sweep")
    p_fig.add_argument("which", choices=["fig2", "fig3", "fig4"])
    _add_common(p_fig)
    return parser


def _overrides_from_args(args):
    overrides = {}
    if args.seed is not None:
        overrides["sampling.seed"] = int(args.seed)
    if args.workers is not None:
        overrides["sampling.workers"] = int(args.workers)
    if args.iterations is not None:
        overrides["figures.iterations"] = int(args.iterations)
    if args.noise_mode is not None:
        overrides["optical.noise_mode"] = args.noise_mode
    if args.quadrature_deg is not None:
        overrides["quadrature.query_step_deg"] = float(args.quadrature_deg)
        overrides["quadrature.figure_step_deg"] = float(args.quadrature_deg)
    return overrides


def _manifest(command, fp, cfg, timings, warnings=(), outputs=()):
    return {
        "schema_version": 1,
        "tool": "leris",
        "tool_version": __version__,
        "command": command,
        "config_fingerprint": fp,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "backend": kernels.active_backend(),
        "wall_clock_s": round(sum(timings.values()), 6),
        "stage_timings_s": {k: round(v, 6) for k, v in timings.items()},
        "warnings": list(warnings),
        "outputs": list(outputs),
    }


def _write_manifest(out_dir, manifest):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _pose_from_args(cfg, args):
    position = np.asarray(args.ue, dtype=float)
    lo = np.asarray(cfg.room_lo)
    hi = np.asarray(cfg.room_hi)
    if np.any(position < lo) or np.any(position > hi):
        raise ConfigError(
            f"user position {position.tolist()} outside the room",
            violations=["ue position outside room extents"])
    az = math.radians(args.azimuth_deg)
    normal = np.array([math.cos(az), math.sin(az), 0.0])
    return position, normal


def _ranging_measurements(scenario, position, normal, noise_mode, seed):
    """Measurements as the ranging stage sees them.

    Deterministic noise biases are receiver constants subtracted exactly
    before ranging, hence synthesized as noise-free; the stochastic mode is
    irreducible and passes through.
    """
    if noise_mode == "stochastic":
        rng = substream(seed, 0)
        return synthesize_measurements(scenario, position, normal,
                                       noise_mode="stochastic", rng=rng)
    return synthesize_measurements(scenario, position, normal,
                                   noise_mode="off")


def _run_localize(scenario, fp, args):
    cfg = scenario.config
    position, normal = _pose_from_args(cfg, args)
    t0 = time.perf_counter()
    measurements = _ranging_measurements(scenario, position, normal,
                                         cfg.noise_mode, cfg.seed)
    estimate = localize(measurements, scenario.vcsels, cfg.pd, scenario.room,
                        power_floor=cfg.power_floor_w)
    dt = time.perf_counter() - t0
    pos_err_mm = 1000.0 * float(np.linalg.norm(estimate.position - position))
    ori_err_deg = math.degrees(angle_between(estimate.orientation, normal))
    report = {
        "true_position_m": position.tolist(),
        "true_azimuth_deg": float(args.azimuth_deg),
        "noise_mode": cfg.noise_mode,
        "serving_anchor_count": len(estimate.per_link_distances),
        "anchor_ids": list(estimate.anchor_ids),
        "estimated_position_m": estimate.position.tolist(),
        "estimated_orientation": estimate.orientation.tolist(),
        "per_link_distances_m": estimate.per_link_distances,
        "position_error_mm": pos_err_mm,
        "orientation_error_deg": ori_err_deg,
        "condition_number": estimate.condition_number,
        "residual_m": estimate.residual_m,
    }
    manifest = _manifest("localize", fp, cfg, {"localize_s": dt})
    report["manifest"] = manifest
    if args.out:
        _write_manifest(args.out, manifest)
    print(json.dumps(report, indent=2))
    return 0


def _db(x):
    return float("-inf") if x == 0 else 10.0 * math.log10(x)


def _run_link_budget(scenario, fp, args):
    cfg = scenario.config
    position, normal = _pose_from_args(cfg, args)
    t0 = time.perf_counter()
    measurements = _ranging_measurements(scenario, position, normal,
                                         cfg.noise_mode, cfg.seed)
    estimate = localize(measurements, scenario.vcsels, cfg.pd, scenario.room,
                        power_floor=cfg.power_floor_w)
    t_loc = time.perf_counter() - t0

    t0 = time.perf_counter()
    ue_node = routing.UeNode(position=tuple(estimate.position),
                             normal=tuple(estimate.orientation),
                             cone_half_angle=cfg.mmwave.ue_directivity_rad,
                             pd_fov=cfg.pd.fov_half_angle_rad)
    routes = routing.enumerate_routes(list(scenario.panels), scenario.ap,
                                      ue_node)
    ctx = routing.RouteContext(
        panels_by_id=scenario.panels_by_id, ap=scenario.ap, params=cfg.mmwave,
        true_ue_position=tuple(position), true_ue_normal=tuple(normal),
        est_ue_position=tuple(estimate.position),
        grid=scenario.query_grid())
    budget = routing.best_route(routes, ctx)
    t_route = time.perf_counter() - t0

    theta_u = None
    ue_gain = 0.0
    if budget.feasible:
        last = scenario.panels_by_id[budget.route.panel_ids[-1]]
        theta_u = angle_between(
            normal, np.asarray(last.center, float) - position)
        ue_gain = mmwave.ue_antenna_gain(theta_u, cfg.mmwave.ue_directivity_rad)
    report = {
        "true_position_m": position.tolist(),
        "true_azimuth_deg": float(args.azimuth_deg),
        "estimated_position_m": estimate.position.tolist(),
        "feasible": budget.feasible,
        "route_panel_ids": list(budget.route.panel_ids) if budget.route else [],
        "segment_lengths_m": (list(budget.route.segment_lengths)
                              if budget.route else []),
        "segment_feasibility": (list(budget.route.feasibility)
                                if budget.route else []),
        "route_gain_db": _db(budget.route_gain),
        "path_loss_db": _db(budget.path_loss),
        "ue_antenna_gain": ue_gain,
        "ue_offset_angle_deg": (None if theta_u is None
                                else math.degrees(theta_u)),
        "spectral_efficiency_bps_hz": budget.spectral_efficiency,
        "candidate_routes": len(routes),
    }
    manifest = _manifest("link-budget", fp, cfg,
                         {"localize_s": t_loc, "route_s": t_route})
    report["manifest"] = manifest
    if args.out:
        _write_manifest(args.out, manifest)
    print(json.dumps(report, indent=2))
    return 0


def run_figure(scenario, which, fp, out_dir, iterations=None, workers=None):
    """Run one figure sweep for every configured panel subset; write files."""
    cfg = scenario.config
    kernels.warmup()
    t0 = time.perf_counter()
    merged = None
    for subset in cfg.panel_subsets:
        if which == "fig2":
            part = sweeps.run_error_vs_azimuth(scenario, subset,
                                               fingerprint=fp)
        elif which == "fig3":
            part = sweeps.run_rate_vs_snr(scenario, subset,
                                          iterations=iterations,
                                          workers=workers, fingerprint=fp)
        else:
            part = sweeps.run_rate_vs_elements(scenario, subset,
                                               iterations=iterations,
                                               workers=workers,
                                               fingerprint=fp)
        merged = part if merged is None else merged.merged_with(part)
    wall = time.perf_counter() - t0

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{which}.csv"
    csv_path.write_bytes(sweeps.render_csv(merged))
    manifest = _manifest(f"figure {which}", fp, cfg, {"sweep_s": wall},
                         warnings=merged.warnings,
                         outputs=[csv_path.name])
    if which == "fig2":
        manifest["grid_points"] = len(merged.rows)
    else:
        manifest["iterations"] = iterations or cfg.figure_iterations
    manifest["figure"] = which
    _write_manifest(out_dir, manifest)
    return csv_path, manifest


def _run_figure_cmd(scenario, fp, args):
    out_dir = args.out or "out"
    csv_path, manifest = run_figure(
        scenario, args.which, fp, out_dir,
        iterations=args.iterations, workers=args.workers)
    print(json.dumps({"csv": str(csv_path), "manifest": manifest}, indent=2))
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, canonical, fp = config_mod.load_config(
            args.config, overrides=_overrides_from_args(args))
        scenario = build_scenario(cfg)
        if args.command == "localize":
            return _run_localize(scenario, fp, args)
        if args.command == "link-budget":
            return _run_link_budget(scenario, fp, args)
        return _run_figure_cmd(scenario, fp, args)
    except SimulationError as err:
        payload = {"error": type(err).__name__, "message": str(err),
                   "exit_code": err.exit_code, "detail": err.detail()}
        print(json.dumps(payload), file=sys.stderr)
        return err.exit_code
    except OSError as err:
        payload = {"error": "IOError", "message": str(err), "exit_code": 13}
        print(json.dumps(payload), file=sys.stderr)
        return 13


if __name__ == "__main__":
    sys.exit(main())
