"""Camera height/pitch estimation from depth maps and road masks.

Per frame: road pixels closer than a depth threshold are back-projected to
a camera-frame point cloud, a dominant plane is found with RANSAC and
refined by orthogonal least squares, and the plane is converted to
(height, pitch) using the ground-plane form n . p + h = 0 with
n = [0, -cos(theta), sin(theta)]. Per-frame estimates are aggregated with
the median. Frames are independent; each uses its own seeded RNG stream,
so parallel processing is order-independent and reproducible.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraRig, backproject
from .maps import DepthMap

# Published extrinsics recovered by this procedure on autonomous-driving
# datasets; shipped as documentation fixtures (height m, pitch deg).
REFERENCE_EXTRINSICS = {
    "argoverse": (1.678, 0.021),
    "ddad": (1.459, -0.519),
    "drivingstereo": (1.739, -0.561),
    "kitti": (1.659, -0.664),
    "waymo": (2.145, -0.331),
}


@dataclass(frozen=True)
class PlaneFit:
    """Unit-normal plane n . p + offset = 0 with the normal's y-component negative."""

    normal: tuple
    offset: float
    inlier_count: int
    inlier_rms: float


@dataclass(frozen=True)
class CalibrationOptions:
    d_thresh: float = 20.0
    iters: int = 500
    inlier_thresh: float = 0.03
    min_inlier_ratio: float = 0.5
    seed: int = 0
    max_workers: int = 1


@dataclass
class CalibrationResult:
    per_frame: list  # [(h_i, theta_i)] for frames that produced a fit
    h_median: float
    theta_median: float
    failed_frames: list = field(default_factory=list)


def filter_road_points(depth: DepthMap, road_mask, rig: CameraRig,
                       d_thresh: float = 20.0) -> np.ndarray:
    """Back-project road pixels with 0 < depth < d_thresh to camera points."""
    road = np.asarray(road_mask, dtype=bool)
    if road.shape != depth.shape:
        raise ValueError("road mask shape does not match depth map")
    keep = road & depth.mask & (depth.values > 0) & (depth.values < d_thresh)
    if np.count_nonzero(keep) < 3:
        raise ValueError("fewer than 3 road points survive filtering")
    vv, uu = np.nonzero(keep)
    return backproject(uu.astype(np.float64), vv.astype(np.float64),
                       depth.values[keep], rig)


def _refit_plane(points: np.ndarray):
    """Orthogonal least squares: centroid plus smallest principal direction."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    cov = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(cov)
    normal = eigvecs[:, 0]
    return normal / np.linalg.norm(normal), centroid


def ransac_plane(points: np.ndarray, iters: int = 500, inlier_thresh: float = 0.03,
                 seed: int = 0, min_inlier_ratio: float = 0.5,
                 hypothesis_chunk: int = 64) -> PlaneFit:
    """Dominant-plane fit: 3-point hypotheses, inliers by absolute distance,
    orthogonal least-squares refit on the best inlier set.

    Deterministic for a fixed seed. Raises if the best hypothesis supports
    fewer than min_inlier_ratio of the points (no dominant plane) or if all
    hypotheses are degenerate (e.g. collinear points).
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points for a plane")
    rng = np.random.default_rng(seed)
    triples = rng.integers(0, n, size=(iters, 3))

    a = pts[triples[:, 0]]
    normals = np.cross(pts[triples[:, 1]] - a, pts[triples[:, 2]] - a)
    norms = np.linalg.norm(normals, axis=1)
    ok = norms > 1e-12
    if not np.any(ok):
        raise ValueError("all plane hypotheses degenerate (collinear points?)")
    normals[ok] /= norms[ok, None]
    offsets = -np.einsum("ij,ij->i", normals, a)

    best_count = -1
    best_mask = None
    for start in range(0, iters, hypothesis_chunk):
        sl = slice(start, min(start + hypothesis_chunk, iters))
        ok_sl = ok[sl]
        if not np.any(ok_sl):
            continue
        dists = np.abs(pts @ normals[sl].T + offsets[sl])
        dists[:, ~ok_sl] = np.inf
        counts = (dists < inlier_thresh).sum(axis=0)
        k = int(np.argmax(counts))
        if counts[k] > best_count:
            best_count = int(counts[k])
            best_mask = dists[:, k] < inlier_thresh

    if best_count < max(3, min_inlier_ratio * n):
        raise ValueError(
            f"no dominant plane: best inlier ratio {best_count / n:.3f} "
            f"< {min_inlier_ratio}")

    normal, centroid = _refit_plane(pts[best_mask])
    if normal[1] > 0:
        normal = -normal
    if normal[1] == 0:
        raise ValueError("fitted plane is vertical; not a ground plane")
    offset = float(-normal @ centroid)
    dists = np.abs(pts @ normal + offset)
    inliers = dists < inlier_thresh
    rms = float(np.sqrt(np.mean(dists[inliers] ** 2))) if np.any(inliers) else float("inf")
    return PlaneFit(normal=tuple(normal), offset=offset,
                    inlier_count=int(np.count_nonzero(inliers)), inlier_rms=rms)


def plane_from_extrinsics(h: float, theta: float) -> PlaneFit:
    """Ground plane implied by a camera at height h with pitch theta."""
    return PlaneFit(normal=(0.0, -math.cos(theta), math.sin(theta)),
                    offset=float(h), inlier_count=0, inlier_rms=0.0)


def plane_to_extrinsics(fit: PlaneFit):
    """Recover (height, pitch) from a sign-normalized ground-plane fit."""
    nx, ny, nz = fit.normal
    if ny >= 0:
        raise ValueError("plane normal must be sign-normalized to ny < 0")
    theta = math.atan2(nz, -ny)
    h = fit.offset
    if h <= 0:
        raise ValueError(f"recovered camera height {h:.4f} m is not positive")
    return h, theta


def _frame_seed(seed: int, index: int):
    # Independent stream per frame so results do not depend on schedule order.
    return np.random.SeedSequence([seed, index])


def _calibrate_frame(frame, rig: CameraRig, opts: CalibrationOptions, index: int):
    depth, road_mask = frame
    points = filter_road_points(depth, road_mask, rig, d_thresh=opts.d_thresh)
    fit = ransac_plane(points, iters=opts.iters, inlier_thresh=opts.inlier_thresh,
                       seed=_frame_seed(opts.seed, index),
                       min_inlier_ratio=opts.min_inlier_ratio)
    return plane_to_extrinsics(fit)


def calibrate_sequence(frames, rig: CameraRig,
                       opts: CalibrationOptions = CalibrationOptions()) -> CalibrationResult:
    """Estimate (h, theta) per frame and aggregate with the median.

    frames: iterable of (DepthMap, road_mask). Frames whose RANSAC fails
    are skipped and reported in failed_frames; all frames failing is an
    error. With opts.max_workers > 1 frames are processed in a thread
    pool; per-frame seeding keeps the output identical either way.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("calibrate_sequence: no frames")

    def run(i):
        try:
            return i, _calibrate_frame(frames[i], rig, opts, i), None
        except ValueError as exc:
            return i, None, str(exc)

    if opts.max_workers > 1:
        with ThreadPoolExecutor(max_workers=opts.max_workers) as pool:
            outcomes = list(pool.map(run, range(len(frames))))
    else:
        outcomes = [run(i) for i in range(len(frames))]

    per_frame, failed = [], []
    for i, est, err in sorted(outcomes):
        if est is None:
            failed.append((i, err))
        else:
            per_frame.append(est)
    if not per_frame:
        raise ValueError("calibration failed on every frame")
    hs = np.array([h for h, _ in per_frame])
    thetas = np.array([t for _, t in per_frame])
    return CalibrationResult(per_frame=per_frame,
                             h_median=float(np.median(hs)),
                             theta_median=float(np.median(thetas)),
                             failed_frames=failed)
