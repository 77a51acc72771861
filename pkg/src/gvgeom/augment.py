"""Geometric augmentation: crop + resize with exact intrinsics bookkeeping.

An augmentation is a crop (x0, y0, w, h) in source pixels followed by a
resize to (H_out, W_out). Its pixel-coordinate action is the affine map
u' = (u - x0) * W_out / w, v' = (v - y0) * H_out / h, which is invertible
and composes exactly; the induced camera update scales fx, fy, cx, cy
accordingly and leaves the physical extrinsics (h, theta) untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraRig


@dataclass(frozen=True)
class AugmentPolicy:
    """Sampling policy: output height range and crop-size fraction range."""

    h_out_range: tuple = (200, 500)
    crop_frac_range: tuple = (0.5, 1.0)


@dataclass(frozen=True)
class AugmentSpec:
    """A concrete crop-then-resize transform from a fixed source frame."""

    crop: tuple  # (x0, y0, w, h) in source pixels
    out_size: tuple  # (H_out, W_out)
    seed: int | None = None

    def __post_init__(self):
        x0, y0, w, h = self.crop
        if w < 1 or h < 1:
            raise ValueError("crop must be at least 1x1")
        if x0 < 0 or y0 < 0:
            raise ValueError("crop origin must be non-negative")
        if self.out_size[0] < 1 or self.out_size[1] < 1:
            raise ValueError("output size must be at least 1x1")

    @classmethod
    def identity(cls, height: int, width: int) -> "AugmentSpec":
        return cls(crop=(0, 0, width, height), out_size=(height, width))

    @property
    def scale(self):
        """(sx, sy) resize factors."""
        x0, y0, w, h = self.crop
        return self.out_size[1] / w, self.out_size[0] / h

    def apply(self, u, v):
        """Source-frame pixel coordinates -> output-frame coordinates."""
        x0, y0, w, h = self.crop
        sx, sy = self.scale
        return (np.asarray(u, dtype=np.float64) - x0) * sx, (np.asarray(v, dtype=np.float64) - y0) * sy

    def inverse(self, u, v):
        """Output-frame pixel coordinates -> source-frame coordinates."""
        x0, y0, w, h = self.crop
        sx, sy = self.scale
        return np.asarray(u, dtype=np.float64) / sx + x0, np.asarray(v, dtype=np.float64) / sy + y0

    def to_dict(self) -> dict:
        return {"crop": list(self.crop), "out_size": list(self.out_size), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentSpec":
        return cls(crop=tuple(d["crop"]), out_size=tuple(d["out_size"]), seed=d.get("seed"))


def sample_augmentation(rng_seed: int, source_dims, policy: AugmentPolicy = AugmentPolicy()) -> AugmentSpec:
    """Draw a random crop + resize, deterministic for a given seed.

    Crop height and width fractions are uniform in crop_frac_range with
    uniform placement; the output height is a uniform integer in
    h_out_range and the output width preserves the crop aspect ratio.
    """
    src_h, src_w = int(source_dims[0]), int(source_dims[1])
    if src_h < 2 or src_w < 2:
        raise ValueError(f"source dims {source_dims} too small to crop")
    rng = np.random.default_rng(rng_seed)
    lo, hi = policy.crop_frac_range
    ch = max(1, int(round(rng.uniform(lo, hi) * src_h)))
    cw = max(1, int(round(rng.uniform(lo, hi) * src_w)))
    ch, cw = min(ch, src_h), min(cw, src_w)
    y0 = int(rng.integers(0, src_h - ch + 1))
    x0 = int(rng.integers(0, src_w - cw + 1))
    h_lo, h_hi = policy.h_out_range
    h_out = int(rng.integers(h_lo, h_hi + 1))
    w_out = max(1, int(round(h_out * cw / ch)))
    return AugmentSpec(crop=(x0, y0, cw, ch), out_size=(h_out, w_out), seed=int(rng_seed))


def transform_rig(rig: CameraRig, spec: AugmentSpec) -> CameraRig:
    """Camera update induced by crop + resize; extrinsics are physical and fixed."""
    x0, y0, w, h = spec.crop
    sx, sy = spec.scale
    return CameraRig(
        fx=sx * rig.fx,
        fy=sy * rig.fy,
        cx=sx * (rig.cx - x0),
        cy=sy * (rig.cy - y0),
        H=spec.out_size[0],
        W=spec.out_size[1],
        h=rig.h,
        theta=rig.theta,
    )


def bilinear_footprint(u, v, shape):
    """Corner indices and weights of bilinear samples at continuous (u, v).

    Returns (rows, cols, weights, in_bounds), each (4, ...) stacked over the
    four corners. Out-of-bounds corners keep their true weight but are
    flagged; callers decide validity (a corner with zero weight never
    counts).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    height, width = shape
    j0 = np.floor(u).astype(np.int64)
    i0 = np.floor(v).astype(np.int64)
    fu = u - j0
    fv = v - i0
    rows = np.stack([i0, i0, i0 + 1, i0 + 1])
    cols = np.stack([j0, j0 + 1, j0, j0 + 1])
    weights = np.stack([(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv])
    in_bounds = (rows >= 0) & (rows < height) & (cols >= 0) & (cols < width)
    return rows, cols, weights, in_bounds


def bilinear_sample(values, mask, u, v, nearest: bool = False):
    """Sample a masked map at continuous coordinates.

    A sample is valid only if every corner it touches with nonzero weight
    is in bounds and valid; values are copied (never rescaled). With
    nearest=True the closest pixel is used instead (for masks/labels).

    Returns (sampled_values, valid).
    """
    if nearest:
        u = np.round(np.asarray(u, dtype=np.float64))
        v = np.round(np.asarray(v, dtype=np.float64))
    rows, cols, weights, in_bounds = bilinear_footprint(u, v, values.shape)
    touching = weights > 0.0
    usable = ~touching | (in_bounds & mask[rows.clip(0, values.shape[0] - 1),
                                            cols.clip(0, values.shape[1] - 1)])
    valid = usable.all(axis=0)
    safe_rows = rows.clip(0, values.shape[0] - 1)
    safe_cols = cols.clip(0, values.shape[1] - 1)
    corner_vals = np.where(touching, values[safe_rows, safe_cols], 0.0)
    sampled = (weights * corner_vals).sum(axis=0)
    return np.where(valid, sampled, 0.0), valid


def warp_map(m, from_spec: AugmentSpec, to_spec: AugmentSpec, nearest: bool = False):
    """Resample a map from one augmentation frame into another.

    Both specs must share a source frame; each target pixel is pulled back
    through to_spec's inverse and pushed through from_spec. Pixels whose
    pre-image falls outside the input map are masked invalid. The input's
    type (and canonical kind, if any) is preserved.
    """
    h_out, w_out = to_spec.out_size
    uu, vv = np.meshgrid(np.arange(w_out, dtype=np.float64),
                         np.arange(h_out, dtype=np.float64))
    su, sv = to_spec.inverse(uu, vv)
    qu, qv = from_spec.apply(su, sv)
    vals, valid = bilinear_sample(m.values, m.mask, qu, qv, nearest=nearest)
    if hasattr(m, "kind"):
        return type(m)(m.kind, vals, valid)
    return type(m)(vals, valid)
