"""Command-line surface: synth / calibrate / transform / fuse / eval /
gradcheck / augment / sensitivity.

All numeric output uses locale-independent formatting with 6 significant
digits. Every subcommand is deterministic given identical inputs and
seeds; the environment variable GVGEOM_SEED overrides any --seed flag.
Failures exit nonzero with a single JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import augment as aug
from . import calibrate as cal
from . import canonical, fileio, fusion, losses, metrics, synth
from .camera import CameraRig
from .maps import DepthMap, UncertaintyMap


def _fmt(x) -> str:
    return format(float(x), ".6g")


def _resolve_seed(cli_seed: int) -> int:
    env = os.environ.get("GVGEOM_SEED")
    return int(env) if env not in (None, "") else int(cli_seed)


def _canonical_config(args) -> canonical.CanonicalConfig:
    return canonical.CanonicalConfig(f_c=args.f_c, d_max=args.d_max,
                                     d_min_ext=args.d_min_ext)


def _add_canonical_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--f-c", type=float, default=700.0,
                   help="canonical focal length in pixels")
    p.add_argument("--d-max", type=float, default=80.0,
                   help="maximum representable depth in meters")
    p.add_argument("--d-min-ext", type=float, default=1.0,
                   help="ground depth anchored at the extended image bottom")


# ----------------------------------------------------------------- synth

def _cmd_synth(args) -> int:
    scene = fileio.load_scene(args.scene)
    rig = fileio.load_rig(args.rig)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args.seed if args.seed is not None else scene.seed)

    depth, road, _ = synth.render_depth(scene, rig)
    for i in range(args.frames):
        frame_depth = depth.values.copy()
        frame_road = road.copy()
        if args.depth_noise > 0:
            noise = synth.NoiseModel("gaussian", sigma=args.depth_noise)
            noisy = synth.inject_noise(frame_depth, noise, [seed, i, 0])
            frame_depth = np.where(depth.mask, noisy, 0.0)
        if args.outlier_frac > 0:
            rng = np.random.default_rng([seed, i, 1])
            corrupt = depth.mask & (rng.random(depth.shape) < args.outlier_frac)
            frame_depth = np.where(
                corrupt, rng.uniform(0.3, 60.0, size=depth.shape), frame_depth)
            frame_road = frame_road & ~corrupt
        fileio.write_depth_map(out_dir / f"depth_{i:04d}.pfm",
                               DepthMap(frame_depth, depth.mask.copy()))
        fileio.write_mask(out_dir / f"road_{i:04d}.pfm", frame_road)
    fileio.save_rig(out_dir / "rig.json", rig)
    print(f"wrote {args.frames} frame(s) to {out_dir}")
    return 0


# ------------------------------------------------------------- calibrate

def _cmd_calibrate(args) -> int:
    in_dir = Path(args.dir)
    rig = fileio.load_rig(in_dir / "rig.json")
    depth_files = sorted(in_dir.glob("depth_*.pfm"))
    if not depth_files:
        raise FileNotFoundError(f"no depth_*.pfm files in {in_dir}")
    frames = []
    for df in depth_files:
        rf = in_dir / df.name.replace("depth_", "road_")
        frames.append((fileio.read_depth_map(df), fileio.read_mask(rf)))
    opts = cal.CalibrationOptions(
        d_thresh=args.d_thresh, iters=args.iters, inlier_thresh=args.inlier_thresh,
        min_inlier_ratio=args.min_inlier_ratio, seed=_resolve_seed(args.seed),
        max_workers=args.threads)
    result = cal.calibrate_sequence(frames, rig, opts)

    heights = [h for h, _ in result.per_frame]
    pitches = [math.degrees(t) for _, t in result.per_frame]
    h_hist = np.histogram(heights, bins=args.hist_bins)
    p_hist = np.histogram(pitches, bins=args.hist_bins)
    report = {
        "per_frame": [
            {"frame": i, "height_m": float(h), "pitch_deg": math.degrees(t)}
            for i, (h, t) in enumerate(result.per_frame)
        ],
        "failed_frames": [{"frame": i, "reason": r} for i, r in result.failed_frames],
        "height_m_median": result.h_median,
        "pitch_deg_median": math.degrees(result.theta_median),
        "histograms": {
            "height_m": {"counts": h_hist[0].tolist(), "edges": h_hist[1].tolist()},
            "pitch_deg": {"counts": p_hist[0].tolist(), "edges": p_hist[1].tolist()},
        },
    }
    fileio.save_json(args.out, report)
    print(f"height_m_median = {_fmt(result.h_median)}")
    print(f"pitch_deg_median = {_fmt(math.degrees(result.theta_median))}")
    return 0


# ------------------------------------------------------------- transform

def _cmd_transform(args) -> int:
    rig = fileio.load_rig(args.rig)
    cfg = _canonical_config(args)
    if args.direction == "from":
        depth = fileio.read_depth_map(args.input)
        if args.mode == "fct":
            cmap = canonical.fct_from_depth(depth, rig, cfg)
            clamped = 0
        else:
            cmap, clamped = canonical.vct_from_depth(depth, rig, cfg)
        fileio.write_canonical_map(args.output, cmap, rig, cfg)
    else:
        cmap = fileio.read_canonical_map(args.input,
                                         "focal" if args.mode == "fct" else "vertical")
        if args.mode == "fct":
            depth = canonical.fct_to_depth(cmap, rig, cfg)
            clamped = 0
        else:
            depth, clamped = canonical.vct_to_depth(cmap, rig, cfg)
        fileio.write_depth_map(args.output, depth)
    print(json.dumps({"clamped": clamped}))
    return 0


# ------------------------------------------------------------------ fuse

def _cmd_fuse(args) -> int:
    d_f = fileio.read_depth_map(args.df)
    d_y = fileio.read_depth_map(args.dy)
    sf_vals = fileio.read_pfm(args.sf).astype(np.float64)
    sy_vals = fileio.read_pfm(args.sy).astype(np.float64)
    s_f = UncertaintyMap(sf_vals, sf_vals != 0.0)
    s_y = UncertaintyMap(sy_vals, sy_vals != 0.0)
    fused = fusion.fuse(d_f, d_y, s_f, s_y)
    fileio.write_depth_map(args.output, fused)
    print(f"fused {int(np.count_nonzero(fused.mask))} pixels")
    return 0


# ------------------------------------------------------------------ eval

def _pair_files(pred: str, gt: str):
    pred_path, gt_path = Path(pred), Path(gt)
    if pred_path.is_dir() != gt_path.is_dir():
        raise ValueError("--pred and --gt must both be files or both be directories")
    if not pred_path.is_dir():
        return [(pred_path, gt_path)]
    preds = sorted(pred_path.glob("*.pfm"))
    if not preds:
        raise FileNotFoundError(f"no .pfm files in {pred_path}")
    pairs = []
    for p in preds:
        g = gt_path / p.name
        if not g.exists():
            raise FileNotFoundError(f"missing ground truth for {p.name}")
        pairs.append((p, g))
    return pairs


def _report_row(split: str, report: metrics.MetricReport) -> str:
    return ",".join([
        split, _fmt(report.abs_rel * 100.0), _fmt(report.rms), _fmt(report.rms_log),
        _fmt(report.delta1), _fmt(report.delta2), _fmt(report.delta3),
        str(report.n_valid),
    ])


EVAL_HEADER = "split,abs_rel_pct,rms,rms_log,delta1,delta2,delta3,n_valid"


def _cmd_eval(args) -> int:
    pairs = _pair_files(args.pred, args.gt)
    d_range = (args.range[0], args.range[1])
    preds, gts = [], []
    for p, g in pairs:
        preds.append(fileio.read_depth_map(p))
        gts.append(fileio.read_depth_map(g))

    if args.per_image:
        reports = [metrics.compute_metrics(p, g, d_range) for p, g in zip(preds, gts)]
        vals = {f: float(np.mean([getattr(r, f) for r in reports]))
                for f in ("abs_rel", "rms", "rms_log", "delta1", "delta2", "delta3")}
        report = metrics.MetricReport(n_valid=sum(r.n_valid for r in reports), **vals)
    else:
        flat_pred = np.concatenate([p.values.ravel() for p in preds])
        flat_gt = np.concatenate([g.values.ravel() for g in gts])
        flat_mask = np.concatenate([(p.mask & g.mask).ravel()
                                    for p, g in zip(preds, gts)])
        report = metrics.compute_metrics(
            DepthMap(flat_pred[None, :], flat_mask[None, :]),
            DepthMap(flat_gt[None, :], flat_mask[None, :]), d_range)

    lines = [EVAL_HEADER, _report_row(args.split, report)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)

    if args.bins:
        edges = [float(x) for x in args.bins.split(",")]
        flat_pred = np.concatenate([p.values.ravel() for p in preds])
        flat_gt = np.concatenate([g.values.ravel() for g in gts])
        flat_mask = np.concatenate([(p.mask & g.mask).ravel()
                                    for p, g in zip(preds, gts)])
        bins = metrics.per_bin_metrics(
            DepthMap(flat_pred[None, :], flat_mask[None, :]),
            DepthMap(flat_gt[None, :], flat_mask[None, :]), edges)
        bin_lines = ["split,bin_lo,bin_hi,abs_rel_pct,rms,rms_log,delta1,delta2,delta3,n_valid"]
        for b in bins:
            if b.report is None:
                bin_lines.append(f"{args.split},{_fmt(b.lo)},{_fmt(b.hi)},,,,,,,0")
            else:
                row = _report_row(args.split, b.report).split(",", 1)[1]
                bin_lines.append(f"{args.split},{_fmt(b.lo)},{_fmt(b.hi)},{row}")
        bin_text = "\n".join(bin_lines) + "\n"
        if args.bin_out:
            Path(args.bin_out).write_text(bin_text)
        else:
            sys.stdout.write(bin_text)
    return 0


# ------------------------------------------------------------- gradcheck

def _gradcheck_table(seed: int, eps: float, size: int = 8):
    """Max relative FD error for each loss on random inputs of one seed."""
    rng = np.random.default_rng(seed)
    shape = (size, size)
    cfg = losses.LossConfig()
    gt_vals = rng.uniform(2.0, 60.0, shape)
    gt = DepthMap(gt_vals)

    rows = []

    def si_fn(inputs):
        return losses.si_log_loss(DepthMap(inputs["pred"]), gt, cfg)

    pred0 = gt_vals * rng.uniform(0.8, 1.25, shape)
    rows.append(("si_log", losses.finite_difference_check(
        si_fn, {"pred": pred0}, eps=eps, seed=seed)))

    def unc_fn(inputs):
        return losses.uncertainty_loss(
            DepthMap(inputs["d_f"]), DepthMap(inputs["d_y"]),
            UncertaintyMap(inputs["sigma_f"]), UncertaintyMap(inputs["sigma_y"]), gt)

    unc_inputs = {
        # Residuals bounded away from the L1 kink at zero.
        "d_f": gt_vals + rng.uniform(0.2, 1.5, shape) * rng.choice([-1, 1], shape),
        "d_y": gt_vals + rng.uniform(0.2, 1.5, shape) * rng.choice([-1, 1], shape),
        "sigma_f": rng.uniform(0.5, 3.0, shape),
        "sigma_y": rng.uniform(0.5, 3.0, shape),
    }
    rows.append(("uncertainty", losses.finite_difference_check(
        unc_fn, unc_inputs, eps=eps, seed=seed)))

    t1 = aug.AugmentSpec(crop=(2, 1, 20, 16), out_size=(size, size))
    t2 = aug.AugmentSpec(crop=(4, 3, 18, 14), out_size=(size, size))
    d1_vals = 10.0 + rng.uniform(0.0, 2.0, shape)
    # D1 warps stay in [10, 12]; keeping D2 well below leaves every residual
    # far from the L1 kink.
    d2_vals = rng.uniform(6.5, 7.5, shape)

    def con_fn(inputs):
        return losses.consistency_loss(DepthMap(inputs["d1"]), DepthMap(d2_vals), t1, t2)

    rows.append(("consistency", losses.finite_difference_check(
        con_fn, {"d1": d1_vals}, eps=eps, seed=seed)))

    def total_fn(inputs):
        si = losses.si_log_loss(DepthMap(inputs["pred"]), gt, cfg)
        unc = losses.uncertainty_loss(
            DepthMap(inputs["d_f"]), DepthMap(inputs["d_y"]),
            UncertaintyMap(inputs["sigma_f"]), UncertaintyMap(inputs["sigma_y"]), gt)
        con = losses.consistency_loss(DepthMap(inputs["d1"]), DepthMap(d2_vals), t1, t2)
        return losses.total_loss(si, unc, con, cfg)

    total_inputs = dict(unc_inputs, pred=pred0, d1=d1_vals)
    rows.append(("total", losses.finite_difference_check(
        total_fn, total_inputs, eps=eps, seed=seed)))
    return rows


def _cmd_gradcheck(args) -> int:
    seed = _resolve_seed(args.seed)
    rows = _gradcheck_table(seed, args.eps, args.size)
    print("loss,max_rel_err")
    worst = 0.0
    for name, err in rows:
        print(f"{name},{_fmt(err)}")
        worst = max(worst, err)
    return 0 if worst < args.tolerance else 1


# --------------------------------------------------------------- augment

def _cmd_augment(args) -> int:
    rig = fileio.load_rig(args.rig)
    depth = fileio.read_depth_map(args.input)
    if args.sample:
        seed = _resolve_seed(args.seed)
        spec = aug.sample_augmentation(seed, depth.shape)
        if args.save_spec:
            fileio.save_augment_spec(args.save_spec, spec)
    else:
        if not args.spec:
            raise ValueError("augment: provide --spec or --sample")
        spec = fileio.load_augment_spec(args.spec)
    identity = aug.AugmentSpec.identity(*depth.shape)
    warped = aug.warp_map(depth, identity, spec, nearest=args.nearest)
    fileio.write_depth_map(args.output, warped)
    fileio.save_rig(args.out_rig, aug.transform_rig(rig, spec))
    print(json.dumps(spec.to_dict()))
    return 0


# ----------------------------------------------------------- sensitivity

DEFAULT_SENSITIVITY_LEVELS = (0.0, 0.5, 1.0, 2.0)


def sensitivity_sweep(scene: synth.SceneSpec, rig: CameraRig,
                      cfg: canonical.CanonicalConfig, levels, trials: int,
                      seed: int, d_range=(0.0, 80.0)):
    """Mean A.Rel of vertically-decoded depth under extrinsic noise.

    For each parameter (height in cm, pitch in tenths of a degree) and
    noise level, the exact canonical map of the true rig is decoded with a
    perturbed rig; rows of (param, sigma_level, mean_abs_rel, trials) are
    returned.
    """
    gt, _, _ = synth.render_depth(scene, rig)
    c_y, _ = canonical.vct_from_depth(gt, rig, cfg)
    rows = []
    for param in ("height", "pitch"):
        for li, level in enumerate(levels):
            vals = []
            for trial in range(trials):
                rng = np.random.default_rng([seed, 0 if param == "height" else 1,
                                             li, trial])
                if param == "height":
                    dh = rng.normal(0.0, level * 0.01)
                    pert = CameraRig(rig.fx, rig.fy, rig.cx, rig.cy, rig.H, rig.W,
                                     max(rig.h + dh, 1e-3), rig.theta)
                else:
                    dth = rng.normal(0.0, math.radians(level * 0.1))
                    pert = CameraRig(rig.fx, rig.fy, rig.cx, rig.cy, rig.H, rig.W,
                                     rig.h, rig.theta + dth)
                decoded, _ = canonical.vct_to_depth(c_y, pert, cfg)
                report = metrics.compute_metrics(decoded, gt, d_range)
                vals.append(report.abs_rel)
            rows.append((param, level, float(np.mean(vals)), trials))
    return rows


def _default_scene() -> synth.SceneSpec:
    return synth.SceneSpec(boxes=(
        synth.Box(center=(-2.0, 12.0, 0.75), extents=(1.8, 4.0, 1.5)),
        synth.Box(center=(2.5, 25.0, 1.0), extents=(2.0, 5.0, 2.0)),
    ))


def _cmd_sensitivity(args) -> int:
    rig = fileio.load_rig(args.rig)
    scene = fileio.load_scene(args.scene) if args.scene else _default_scene()
    cfg = _canonical_config(args)
    levels = [float(x) for x in args.levels.split(",")]
    rows = sensitivity_sweep(scene, rig, cfg, levels, args.trials,
                             _resolve_seed(args.seed))
    lines = ["param,sigma,abs_rel_mean,trials"]
    lines += [f"{p},{_fmt(s)},{_fmt(a)},{t}" for p, s, a, t in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gvgeom",
        description="Ground-vehicle monocular-depth geometry toolkit.")
    parser.add_argument("--threads", type=int, default=1,
                        help="cap worker parallelism for frame-level operations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render depth/road-mask frames for a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--rig", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--depth-noise", type=float, default=0.0,
                   help="Gaussian depth noise sigma in meters")
    p.add_argument("--outlier-frac", type=float, default=0.0,
                   help="fraction of pixels corrupted and excluded from the road mask")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("calibrate", help="estimate camera height/pitch from frames")
    p.add_argument("--dir", required=True,
                   help="directory with depth_*.pfm, road_*.pfm, rig.json")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--d-thresh", type=float, default=20.0)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--inlier-thresh", type=float, default=0.03)
    p.add_argument("--min-inlier-ratio", type=float, default=0.5)
    p.add_argument("--hist-bins", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("transform", help="depth <-> canonical maps")
    p.add_argument("--mode", choices=("fct", "vct"), required=True)
    p.add_argument("--direction", choices=("to", "from"), required=True,
                   help="'from' depth to canonical, 'to' depth from canonical")
    p.add_argument("--rig", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_canonical_args(p)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("fuse", help="uncertainty-weighted fusion of two cue depths")
    p.add_argument("--df", required=True)
    p.add_argument("--dy", required=True)
    p.add_argument("--sf", required=True)
    p.add_argument("--sy", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("eval", help="depth metrics as CSV")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--range", type=float, nargs=2, default=(0.0, 80.0))
    p.add_argument("--bins", default=None, help="comma-separated bin edges")
    p.add_argument("--per-image", action="store_true",
                   help="average per-image metrics instead of flattening pixels")
    p.add_argument("--split", default="eval")
    p.add_argument("--out", default=None)
    p.add_argument("--bin-out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference checks of loss gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--size", type=int, default=8)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("augment", help="warp a map and update the rig")
    p.add_argument("--rig", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--out-rig", required=True)
    p.add_argument("--spec", default=None, help="augmentation spec JSON")
    p.add_argument("--sample", action="store_true",
                   help="sample a random spec instead of reading one")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--save-spec", default=None)
    p.add_argument("--nearest", action="store_true",
                   help="nearest-neighbor resampling (for masks)")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("sensitivity",
                       help="A.Rel of vertically-decoded depth under extrinsic noise")
    p.add_argument("--rig", required=True)
    p.add_argument("--scene", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--levels", default="0,0.5,1,2",
                   help="noise levels (cm for height, tenths of a degree for pitch)")
    _add_canonical_args(p)
    p.set_defaults(func=_cmd_sensitivity)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.threads = max(1, args.threads)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc),
                                     "type": type(exc).__name__}) + "\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
