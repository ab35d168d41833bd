"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataio, evaluation, learning, simulator
from .errors import ConfigError, DataError, DomainError
from .learning import residual_targets
from .models import parse_spec

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

DEFAULT_METHODS = "mean,knn:10,sh:4,sh:14,sh:28,poly:19,grid:10x20:0.03"

log = logging.getLogger("uavpattern")


# -- shared flag groups -------------------------------------------------------

def _add_data_flags(p):
    g = p.add_argument_group("input data")
    g.add_argument("--data", type=Path, help="directory with poses_a.csv, poses_b.csv, signals.csv")
    g.add_argument("--poses-a", type=Path)
    g.add_argument("--poses-b", type=Path)
    g.add_argument("--signals", type=Path)
    g.add_argument("--matched", type=Path, help="already matched sample CSV")
    g.add_argument("--id-a", default="a")
    g.add_argument("--id-b", default="b")
    g.add_argument("--tx", default=None, help="transmitter id (default: id-a)")
    g.add_argument("--rx", default=None, help="receiver id (default: id-b)")
    g.add_argument("--wavelength", type=float, default=simulator.DEFAULT_WAVELENGTH)


def _load_training_set(args):
    if not args.wavelength > 0:
        raise ConfigError("--wavelength must be positive")
    if args.matched is not None:
        ts = dataio.load_matched_csv(args.matched, args.wavelength, args.id_a, args.id_b)
        return ts, {"kept": len(ts), "dropped": 0}
    paths = {
        "poses_a": args.poses_a or (args.data / "poses_a.csv" if args.data else None),
        "poses_b": args.poses_b or (args.data / "poses_b.csv" if args.data else None),
        "signals": args.signals or (args.data / "signals.csv" if args.data else None),
    }
    missing = [k for k, v in paths.items() if v is None]
    if missing:
        raise ConfigError(f"missing input: give --data or --{', --'.join(m.replace('_', '-') for m in missing)}")
    pose_a = dataio.load_pose_csv(paths["poses_a"], args.id_a)
    pose_b = dataio.load_pose_csv(paths["poses_b"], args.id_b)
    signals = dataio.load_signal_csv(paths["signals"])
    direction = (args.tx or args.id_a, args.rx or args.id_b)
    res = dataio.match_samples(pose_a, pose_b, signals, direction, args.wavelength)
    if res.dropped:
        log.warning("dropped %d of %d %s->%s signals outside the pose overlap",
                    res.dropped, res.kept + res.dropped, *direction)
    return res.training_set, {"kept": res.kept, "dropped": res.dropped}


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


# -- subcommands --------------------------------------------------------------

def cmd_simulate(args):
    cfg = simulator.TrajectoryConfig(
        diameter=args.diameter, center_altitude=args.altitude, loops=args.loops,
        samples_per_loop=args.samples_per_loop, heading_step=args.heading_step,
        sample_rate=args.sample_rate, heading_mode=args.heading_mode,
    )
    pattern_a, desc_a = simulator.parse_pattern(args.pattern_a, seed=args.seed + 1)
    pattern_b, desc_b = simulator.parse_pattern(args.pattern_b, seed=args.seed + 2)
    scene = simulator.GroundTruthScene(
        pattern_a, pattern_b, p_tx=args.p_tx, wavelength=args.wavelength,
        noise_sigma=args.noise_sigma, seed=args.seed,
        description={"pattern_a": desc_a, "pattern_b": desc_b},
    )
    poses = simulator.generate_trajectory(cfg)
    ds = simulator.synthesize(poses, scene)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_pose_csv(out / "poses_a.csv", poses.t, poses.pos_a, poses.att_a)
    dataio.write_pose_csv(out / "poses_b.csv", poses.t, poses.pos_b, poses.att_b)
    ts = ds.training_set
    dataio.write_signal_csv(out / "signals.csv", ts.t, ts.tx_id, ts.rx_id, ts.p_tx, ts.p_rx)
    scene_doc = {
        "trajectory": cfg.to_dict(),
        "scene": ds.provenance,
        "ground_truth": {
            "pattern_a": {**desc_a, "basis": pattern_a.spec.label, "coeffs": pattern_a.coeffs.tolist()},
            "pattern_b": {**desc_b, "basis": pattern_b.spec.label, "coeffs": pattern_b.coeffs.tolist()},
        },
        "direction": [ts.tx_id, ts.rx_id],
        "samples": len(ts),
    }
    (out / "scene.json").write_text(json.dumps(scene_doc, indent=1) + "\n", encoding="utf-8")
    _emit({"out": str(out), "samples": len(ts)})
    return 0


def cmd_match(args):
    ts, counts = _load_training_set(args)
    dataio.write_matched_csv(args.out, ts)
    _emit({**counts, "out": str(args.out)})
    return 0


def cmd_fit(args):
    spec = parse_spec(args.spec)
    if args.kappa < 0:
        raise ConfigError("--kappa must be non-negative")
    ts, counts = _load_training_set(args)
    model = learning.fit(ts, spec, args.kappa)
    r = residual_targets(ts) - model.joint_gain(ts.obs)
    provenance = {
        "dataset_sha256": dataio.dataset_hash(ts),
        "samples": len(ts),
        "direction": [ts.tx_id, ts.rx_id],
        "spec": spec.label,
        "kappa": args.kappa,
    }
    dataio.save_model(model, args.out, provenance)
    if args.plot:
        from .plotting import plot_model_patterns
        plot_model_patterns(model, args.plot, ts.obs)
    _emit({
        "train_rmse_db": evaluation.rmse(r), "n": len(ts), "param_count": spec.dimension,
        "kappa": args.kappa, "spec": spec.label, "dropped": counts["dropped"], "out": str(args.out),
    })
    return 0


def cmd_evaluate(args):
    if args.kappa < 0:
        raise ConfigError("--kappa must be non-negative")
    methods = [evaluation.parse_method(m, args.kappa) for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise ConfigError("--methods is empty")
    cfg = evaluation.CrossValConfig(args.splits, args.test_fraction, args.seed)
    ts, counts = _load_training_set(args)
    reports = evaluation.benchmark(ts, methods, cfg, args.kappa, args.workers)
    provenance = {
        "dataset_sha256": dataio.dataset_hash(ts), "samples": len(ts), **counts,
        "kappa": args.kappa, "methods": [m.label for m in methods],
    }
    csv_text = evaluation.reports_to_csv(reports)
    if args.out_csv:
        args.out_csv.write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    if args.out_json:
        args.out_json.write_text(evaluation.reports_to_json(reports, cfg, provenance), encoding="utf-8")
    if args.plot:
        from .plotting import plot_benchmark
        plot_benchmark(reports, args.plot)
    failed = [r for r in reports if r.error]
    for r in failed:
        log.error("%s failed: %s", r.method, r.error)
    return EXIT_NUMERIC if failed and len(failed) == len(reports) else 0


def cmd_export_pattern(args):
    if args.n_azimuth < 1 or args.n_inclination < 1:
        raise ConfigError("grid sizes must be positive")
    model = dataio.load_model(args.model)
    if args.uav not in (model.a_id, model.b_id):
        raise ConfigError(f"--uav must be {model.a_id!r} or {model.b_id!r}")
    pattern = model.pattern_a if args.uav == model.a_id else model.pattern_b
    dataio.export_pattern_grid(pattern, args.n_azimuth, args.n_inclination, args.out)
    if args.plot:
        from .plotting import plot_pattern
        plot_pattern(pattern, args.plot, title=f"G_{args.uav} ({model.spec.label}) [dB]")
    _emit({"rows": args.n_azimuth * args.n_inclination, "out": str(args.out)})
    return 0


def cmd_noise_analysis(args):
    if args.k < 1:
        raise ConfigError("--k must be positive")
    ts, _ = _load_training_set(args)
    na = evaluation.local_noise_analysis(ts, args.k)
    dataio.write_noise_csv(args.out, ts.t, na.max_spread_deg, na.rssi_std_db)
    if args.plot:
        from .plotting import plot_noise_analysis
        plot_noise_analysis(na, args.plot)
    _emit({
        "rows": len(na), "median_rssi_std_db": float(np.median(na.rssi_std_db)),
        "median_spread_deg": float(np.median(na.max_spread_deg)), "out": str(args.out),
    })
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavpattern", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a calibration flight")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loops", type=int, default=24)
    p.add_argument("--samples-per-loop", type=int, default=360)
    p.add_argument("--diameter", type=float, default=10.0)
    p.add_argument("--altitude", type=float, default=20.0)
    p.add_argument("--sample-rate", type=float, default=400.0)
    p.add_argument("--heading-step", type=float, default=None, help="radians (default 2*pi/loops)")
    p.add_argument("--heading-mode", choices=("fixed", "face_center"), default="fixed")
    p.add_argument("--noise-sigma", type=float, default=simulator.DEFAULT_NOISE_SIGMA)
    p.add_argument("--p-tx", type=float, default=simulator.DEFAULT_P_TX)
    p.add_argument("--wavelength", type=float, default=simulator.DEFAULT_WAVELENGTH)
    p.add_argument("--pattern-a", default="dipole-horizontal", help=" | ".join(simulator.PATTERN_GRAMMAR))
    p.add_argument("--pattern-b", default="dipole-vertical", help=" | ".join(simulator.PATTERN_GRAMMAR))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("match", help="match signals to interpolated poses")
    _add_data_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("fit", help="fit both radiation patterns")
    _add_data_flags(p)
    p.add_argument("--spec", default="sh:14", help="sh:ORDER | grid:NINCxNAZ[:SIGMA] | poly:ORDER")
    p.add_argument("--kappa", type=float, default=learning.DEFAULT_KAPPA)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--plot", type=Path, help="write a pattern figure (PNG)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="cross-validated benchmark")
    _add_data_flags(p)
    p.add_argument("--methods", default=DEFAULT_METHODS)
    p.add_argument("--splits", type=int, default=30)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kappa", type=float, default=learning.DEFAULT_KAPPA)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-csv", type=Path)
    p.add_argument("--out-json", type=Path)
    p.add_argument("--plot", type=Path, help="write a benchmark figure (PNG)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-pattern", help="tabulate a fitted pattern on a lattice")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--uav", default="a")
    p.add_argument("--n-azimuth", type=int, default=360)
    p.add_argument("--n-inclination", type=int, default=181)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--plot", type=Path, help="write a heatmap (PNG)")
    p.set_defaults(func=cmd_export_pattern)

    p = sub.add_parser("noise-analysis", help="local neighbourhood RSSI statistics")
    _add_data_flags(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--plot", type=Path, help="write a scatter figure (PNG)")
    p.set_defaults(func=cmd_noise_analysis)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except DataError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
