"""Synthetic ray-casting oracle for exact depth maps and road masks.

Scenes are a ground plane (optionally offset and tilted) plus axis-aligned
boxes in the ego frame. Rays through pixel centers are parameterized by
camera z-depth, so with an unperturbed plane every ground pixel
reproduces the analytic ground depth exactly. The renderer also
simulates the two cues' canonical predictions with controlled noise and
oracle uncertainty maps for end-to-end pipeline tests.

Ray casting is per-pixel and embarrassingly parallel; RNG streams are
seeded per map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import canonical, fusion
from .camera import CameraRig, rotation_from_pitch
from .maps import DepthMap

MAX_SLOPE = math.radians(10.0)


@dataclass(frozen=True)
class GroundPlane:
    """Ground surface: height offset and small tilts about the ego x/y axes."""

    z0: float = 0.0
    slope_x: float = 0.0  # radians, rotation about ego x (tilts along y)
    slope_y: float = 0.0  # radians, rotation about ego y (tilts along x)

    def __post_init__(self):
        if max(abs(self.slope_x), abs(self.slope_y)) >= MAX_SLOPE:
            raise ValueError("ground slope magnitudes must stay below 10 degrees")

    def normal(self) -> np.ndarray:
        sx, sy = self.slope_x, self.slope_y
        rot_x = np.array([[1, 0, 0],
                          [0, math.cos(sx), -math.sin(sx)],
                          [0, math.sin(sx), math.cos(sx)]])
        rot_y = np.array([[math.cos(sy), 0, math.sin(sy)],
                          [0, 1, 0],
                          [-math.sin(sy), 0, math.cos(sy)]])
        return rot_y @ rot_x @ np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in the ego frame; extents are full side lengths."""

    center: tuple
    extents: tuple

    def __post_init__(self):
        if min(self.extents) <= 0:
            raise ValueError("box extents must be positive")


@dataclass(frozen=True)
class SceneSpec:
    ground: GroundPlane = GroundPlane()
    boxes: tuple = ()
    seed: int = 0


@dataclass(frozen=True)
class NoiseModel:
    """Controlled perturbation of a map in its native units.

    kinds: "gaussian" (additive), "gaussian-log" (multiplicative via
    exp of Gaussian log perturbations), "bias" (deterministic additive,
    scalar or per-pixel array).
    """

    kind: str = "gaussian"
    sigma: float = 0.0
    bias: object = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "gaussian-log", "bias"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("noise sigma must be non-negative")


def inject_noise(values: np.ndarray, model: NoiseModel, seed) -> np.ndarray:
    """Apply a noise model; deterministic per seed, identity for sigma = 0."""
    values = np.asarray(values, dtype=np.float64)
    if model.kind == "bias":
        return values + np.asarray(model.bias, dtype=np.float64)
    if model.sigma == 0.0:
        return values.copy()
    rng = np.random.default_rng(seed)
    draw = rng.normal(0.0, model.sigma, size=values.shape)
    if model.kind == "gaussian":
        return values + draw
    return values * np.exp(draw)


def _pixel_rays(rig: CameraRig):
    """Ego-frame ray directions, parameterized so t equals camera z-depth."""
    uu, vv = np.meshgrid(np.arange(rig.W, dtype=np.float64),
                         np.arange(rig.H, dtype=np.float64))
    dirs_cam = np.stack([(uu - rig.cx) / rig.fx, (vv - rig.cy) / rig.fy,
                         np.ones_like(uu)], axis=-1)
    return dirs_cam @ rotation_from_pitch(rig.theta)  # row-vector form of R^T d


def render_depth(scene: SceneSpec, rig: CameraRig):
    """Exact nearest-hit depth for all pixels.

    Returns (DepthMap, road_mask, instance_ids) where instance_ids is -1
    for no hit, 0 for the ground, and i + 1 for scene.boxes[i]; road_mask
    marks pixels whose nearest hit is the unoccluded ground.
    """
    dirs = _pixel_rays(rig)
    origin = np.array([0.0, 0.0, rig.h])

    n = scene.ground.normal()
    p0 = np.array([0.0, 0.0, scene.ground.z0])
    denom = dirs @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = (n @ (p0 - origin)) / denom
    t_ground = np.where((t_ground > 0) & np.isfinite(t_ground), t_ground, np.inf)

    best_t = t_ground
    ids = np.where(np.isfinite(t_ground), 0, -1)

    for i, box in enumerate(scene.boxes):
        lo = np.asarray(box.center) - 0.5 * np.asarray(box.extents)
        hi = np.asarray(box.center) + 0.5 * np.asarray(box.extents)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_lo = (lo - origin) / dirs
            t_hi = (hi - origin) / dirs
        zero = dirs == 0.0
        if np.any(zero):
            # Axis-parallel rays: the slab constrains nothing if the origin
            # lies inside it, otherwise it forces a miss.
            inside = (origin >= lo) & (origin <= hi)
            t_lo = np.where(zero, np.where(inside, -np.inf, np.inf), t_lo)
            t_hi = np.where(zero, np.where(inside, np.inf, -np.inf), t_hi)
        t_near = np.minimum(t_lo, t_hi).max(axis=-1)
        t_far = np.maximum(t_lo, t_hi).min(axis=-1)
        hit = (t_near <= t_far) & (t_near > 0)
        t_box = np.where(hit, t_near, np.inf)
        closer = t_box < best_t
        best_t = np.where(closer, t_box, best_t)
        ids = np.where(closer, i + 1, ids)

    mask = np.isfinite(best_t)
    depth = DepthMap(np.where(mask, best_t, 0.0), mask)
    road_mask = mask & (ids == 0)
    return depth, road_mask, ids


def simulate_cue_predictions(gt: DepthMap, rig: CameraRig, cfg: canonical.CanonicalConfig,
                             noise_f: NoiseModel, noise_y: NoiseModel, seed: int,
                             sigma_floor: float = 0.0):
    """Noisy canonical predictions with oracle uncertainty maps.

    The two canonical maps are the exact transforms of gt plus the given
    noise; each oracle uncertainty equals the realized absolute depth
    error of its cue after decoding (the stationary point of the
    uncertainty-weighted loss), optionally floored.

    Returns (c_f, c_y, sigma_f, sigma_y).
    """
    c_f = canonical.fct_from_depth(gt, rig, cfg)
    c_y, _ = canonical.vct_from_depth(gt, rig, cfg)
    c_f.values = inject_noise(c_f.values, noise_f, [seed, 0])
    c_y.values = inject_noise(c_y.values, noise_y, [seed, 1])

    d_f = canonical.fct_to_depth(c_f, rig, cfg)
    d_y, _ = canonical.vct_to_depth(c_y, rig, cfg)
    err_f = np.where(gt.mask, np.abs(d_f.values - gt.values), 0.0)
    err_y = np.where(gt.mask, np.abs(d_y.values - gt.values), 0.0)
    sigma_f = fusion.UncertaintyMap(np.maximum(err_f, sigma_floor), gt.mask.copy())
    sigma_y = fusion.UncertaintyMap(np.maximum(err_y, sigma_floor), gt.mask.copy())
    return c_f, c_y, sigma_f, sigma_y


def scene_from_dict(d: dict) -> SceneSpec:
    """Scene description with angles in degrees (file boundary)."""
    g = d.get("ground", {})
    ground = GroundPlane(z0=float(g.get("z0", 0.0)),
                         slope_x=math.radians(float(g.get("slope_x_deg", 0.0))),
                         slope_y=math.radians(float(g.get("slope_y_deg", 0.0))))
    boxes = tuple(Box(center=tuple(b["center"]), extents=tuple(b["extents"]))
                  for b in d.get("boxes", ()))
    return SceneSpec(ground=ground, boxes=boxes, seed=int(d.get("seed", 0)))


def scene_to_dict(scene: SceneSpec) -> dict:
    return {
        "ground": {
            "z0": scene.ground.z0,
            "slope_x_deg": math.degrees(scene.ground.slope_x),
            "slope_y_deg": math.degrees(scene.ground.slope_y),
        },
        "boxes": [{"center": list(b.center), "extents": list(b.extents)}
                  for b in scene.boxes],
        "seed": scene.seed,
    }
