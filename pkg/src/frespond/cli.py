"""Command line interface: frespond map|cuts|detect|validate.

Exit codes: 0 success, 2 validation error (bad spec, bad arguments),
3 runtime/compute error. Parallelism is bounded by --threads, falling back
to the FRESPOND_THREADS environment variable, then the CPU count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .detection import fit_hypotheses, kl_divergence, roc_analytic
from .diffraction import wavelength_m
from .errors import FrespondError, ValidationError
from .geometry import classify_positions
from .scenario import (
    AttenuationMap,
    ingest_measurements,
    predict_map,
)
from .specfile import (
    ExperimentSpec,
    RunManifest,
    load_spec,
    model_patterns,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

# Heuristic sheet-sample throughput for cost projections (samples/s/thread).
_SAMPLES_PER_SECOND = 5.0e6


def _default_threads() -> int:
    env = os.environ.get("FRESPOND_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def _apply_model(spec: ExperimentSpec, model: str | None) -> ExperimentSpec:
    if model is None:
        return spec
    tx, rx = model_patterns(model)
    return replace(spec, config=spec.config.with_patterns(tx, rx))


def _mean_wavelength(spec: ExperimentSpec) -> float:
    return wavelength_m(float(np.mean(spec.config.freqs_hz)))


def _split_for(spec: ExperimentSpec):
    cfg = spec.config
    return classify_positions(
        cfg.grid, cfg.geom, _mean_wavelength(spec), spec.membership, cfg.sheet
    )


def cmd_map(args) -> int:
    spec = _apply_model(load_spec(args.spec), args.model)
    amap = predict_map(spec.config, workers=args.threads)
    amap.provenance["spec_sha256"] = spec.config_sha256
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "map.csv")
    json_path = os.path.join(args.out, "map.json")
    amap.write_csv(csv_path)
    amap.write_json(json_path)
    manifest = RunManifest("map", spec.config_sha256, spec.seed)
    manifest.add_output(csv_path)
    manifest.add_output(json_path)
    manifest.write(os.path.join(args.out, "manifest.json"))
    print(f"wrote {csv_path} ({amap.size} positions), {json_path}")
    return EXIT_OK


def cmd_cuts(args) -> int:
    spec = _apply_model(load_spec(args.spec), args.model)
    cfg = spec.config
    try:
        columns = [int(c) for c in args.columns.split(",") if c.strip()]
    except ValueError as exc:
        raise ValidationError(f"--columns: {exc}") from exc
    if not columns:
        raise ValidationError("--columns: no column indices given")
    if cfg.grid.explicit_positions is not None:
        raise ValidationError("cuts need a regular grid, not explicit positions")
    for c in columns:
        if not 1 <= c <= cfg.grid.n_along:
            raise ValidationError(
                f"--columns: column {c} outside 1..{cfg.grid.n_along}"
            )
    amap = predict_map(cfg, keep_samples=True, workers=args.threads)
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest("cuts", spec.config_sha256, spec.seed)
    n_across = cfg.grid.n_across
    for c in columns:
        sel = slice((c - 1) * n_across, c * n_across)
        path = os.path.join(args.out, f"cut_col{c}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("position_id,x_m,y_m,mean_db,p20_db,p80_db\n")
            for i in range(sel.start, sel.stop):
                fh.write(
                    f"{int(amap.ids[i])},{float(amap.xs[i])!r},"
                    f"{float(amap.ys[i])!r},{float(amap.aggregate_db[i])!r},"
                    f"{float(amap.band20_db[i])!r},{float(amap.band80_db[i])!r}\n"
                )
        manifest.add_output(path)
        print(f"wrote {path}")
    manifest.write(os.path.join(args.out, "manifest.json"))
    return EXIT_OK


def _hypothesis_report(amap: AttenuationMap, split, per_frequency: bool) -> dict:
    f0, f1 = fit_hypotheses(amap, split, per_frequency=per_frequency)
    curve = roc_analytic(f0, f1)
    return {
        "f0": {"mu_db": f0.mu_db, "sigma_db": f0.sigma_db},
        "f1": {"mu_db": f1.mu_db, "sigma_db": f1.sigma_db},
        "separation_db": abs(f0.mu_db - f1.mu_db),
        "kl_f0_f1": kl_divergence(f0, f1),
        "auc": curve.auc,
        "_curve": curve,
    }


def cmd_detect(args) -> int:
    spec = _apply_model(load_spec(args.spec), args.model)
    cfg = spec.config
    split = _split_for(spec)
    amap = predict_map(cfg, workers=args.threads)
    report = {
        "membership": {
            "inside_ids": sorted(split.inside_ids),
            "outside_ids": sorted(split.outside_ids),
            "excluded_ids": sorted(split.excluded_ids),
        },
        "model": _hypothesis_report(amap, split, args.per_frequency),
    }
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest("detect", spec.config_sha256, spec.seed)

    model_roc = os.path.join(args.out, "roc_model.csv")
    report["model"].pop("_curve").write_csv(model_roc)
    manifest.add_output(model_roc)

    if args.measurements:
        power_csv, freespace_csv = args.measurements
        measured = ingest_measurements(power_csv, freespace_csv, cfg.grid)
        report["measured"] = _hypothesis_report(measured, split, args.per_frequency)
        measured_roc = os.path.join(args.out, "roc_measured.csv")
        report["measured"].pop("_curve").write_csv(measured_roc)
        manifest.add_output(measured_roc)

    json_path = os.path.join(args.out, "detect.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    manifest.add_output(json_path)
    manifest.write(os.path.join(args.out, "manifest.json"))

    model = report["model"]
    print(
        f"model: separation {model['separation_db']:.2f} dB, "
        f"KL {model['kl_f0_f1']:.3f}, AUC {model['auc']:.4f}"
    )
    if "measured" in report:
        meas = report["measured"]
        print(
            f"measured: separation {meas['separation_db']:.2f} dB, "
            f"KL {meas['kl_f0_f1']:.3f}, AUC {meas['auc']:.4f}"
        )
    print(f"wrote {json_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    spec = load_spec(args.spec)
    cfg = spec.config
    print(f"spec OK: schema 1, sha256 {spec.config_sha256[:16]}..., seed {spec.seed}")

    lam_min = wavelength_m(max(cfg.freqs_hz))
    jitter_reach = cfg.jitter.delta_m / 2.0
    warnings = 0
    total_samples = 0
    for pid, x, y in cfg.grid.positions():
        if not 0 < x < cfg.geom.d_m:
            print(f"ERROR position {pid}: x={x} not strictly between the antennas")
            return EXIT_VALIDATION
        sheet = cfg.sheet.at(x, y)
        step = cfg.quad.resolve_step(sheet, cfg.geom, lam_min)
        n = math.ceil(sheet.width_m / step) * math.ceil(sheet.height_m / step)
        total_samples += n * cfg.jitter.n_samples
        near_tx = x - jitter_reach
        near_rx = cfg.geom.d_m - x - jitter_reach
        for side, dist in (("TX", near_tx), ("RX", near_rx)):
            if dist < 0.25:
                print(
                    f"WARNING position {pid}: sheet may come within {dist:.3f} m of "
                    f"the {side} antenna (Fraunhofer region starts ~0.25 m for "
                    f"directional, ~0.15 m for omni antennas)"
                )
                warnings += 1
    runtime = total_samples / (_SAMPLES_PER_SECOND * args.threads)
    print(
        f"quadrature cost: ~{total_samples:,} sheet samples over "
        f"{cfg.grid.size} positions x {cfg.jitter.n_samples} jitter draws "
        f"({len(cfg.freqs_hz)} frequencies share each sample grid)"
    )
    print(f"projected map runtime: ~{runtime:.0f} s at {args.threads} thread(s)")
    print(f"{warnings} warning(s)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frespond",
        description="Body-shadowing prediction and passive-detection analysis "
        "for radio links",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("spec", help="experiment spec JSON file")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=_default_threads(),
            help="parallel worker bound (default: FRESPOND_THREADS or CPU count)",
        )

    p_map = sub.add_parser("map", help="predict the attenuation map over the grid")
    common(p_map)
    p_map.add_argument("--model", choices=["omni", "dir", "mixed"], default=None)
    p_map.set_defaults(func=cmd_map)

    p_cuts = sub.add_parser("cuts", help="orthogonal cuts with percentile bands")
    common(p_cuts)
    p_cuts.add_argument("--columns", default="1,4", help="1-based column indices, comma-separated")
    p_cuts.add_argument("--model", choices=["omni", "dir", "mixed"], default=None)
    p_cuts.set_defaults(func=cmd_cuts)

    p_det = sub.add_parser("detect", help="hypothesis fits, ROC, KL report")
    common(p_det)
    p_det.add_argument(
        "--measurements",
        nargs=2,
        metavar=("POWER_CSV", "FREESPACE_CSV"),
        default=None,
        help="measured power and free-space reference CSVs",
    )
    p_det.add_argument("--model", choices=["omni", "dir", "mixed"], default=None)
    p_det.add_argument(
        "--per-frequency",
        action="store_true",
        help="fit hypotheses on per-frequency attenuations instead of position means",
    )
    p_det.set_defaults(func=cmd_detect)

    p_val = sub.add_parser("validate", help="schema check, warnings, cost estimate")
    common(p_val, needs_out=False)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FrespondError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
