"""Canonical depth representations and their rig-dependent transforms.

Two prediction spaces disentangle depth from camera parameters:

* focal canonical: depth rescaled to a fixed canonical focal length,
  D = (fy / f_c) * C.
* vertical canonical: the vertical image position of each point's
  ground-plane projection, expressed in virtually extended image
  coordinates so that projections below the field of view stay
  representable, and bounded to [0, y_max] where y_max is the pre-image
  of d_max under the ground-depth mapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraRig
from .maps import FOCAL, VERTICAL, CanonicalMap, DepthMap


@dataclass(frozen=True)
class CanonicalConfig:
    """Knobs of the canonical spaces.

    f_c: canonical focal length in pixels (only the ratio fy/f_c matters).
    d_max: largest representable depth in meters.
    d_min_ext: ground depth anchored to the extended image bottom (y = 0).
    """

    f_c: float = 700.0
    d_max: float = 80.0
    d_min_ext: float = 1.0

    def __post_init__(self):
        if not self.f_c > 0:
            raise ValueError("canonical focal length must be positive")
        if not 0 < self.d_min_ext < self.d_max:
            raise ValueError("need 0 < d_min_ext < d_max")


def extended_height(rig: CameraRig, cfg: CanonicalConfig) -> float:
    """Virtual image height H_ext such that y = 0 maps to depth d_min_ext.

    Closed form cy + fy (h / d_min_ext + sin t) / cos t, floored at H.
    """
    c, s = np.cos(rig.theta), np.sin(rig.theta)
    h_ext = rig.cy + rig.fy * (rig.h / cfg.d_min_ext + s) / c
    return float(max(h_ext, rig.H))


def y_max(rig: CameraRig, cfg: CanonicalConfig, h_ext: float | None = None) -> float:
    """Upper regression bound: the extended-image position mapping to d_max."""
    if h_ext is None:
        h_ext = extended_height(rig, cfg)
    c, s = np.cos(rig.theta), np.sin(rig.theta)
    return float(h_ext - rig.cy - rig.fy * (rig.h / cfg.d_max + s) / c)


def fct_to_depth(c: CanonicalMap, rig: CameraRig, cfg: CanonicalConfig) -> DepthMap:
    """Focal canonical -> metric depth: elementwise scale by fy / f_c."""
    if c.kind != FOCAL:
        raise ValueError(f"expected a focal canonical map, got kind {c.kind!r}")
    return DepthMap(c.values * (rig.fy / cfg.f_c), c.mask.copy())


def fct_from_depth(d: DepthMap, rig: CameraRig, cfg: CanonicalConfig) -> CanonicalMap:
    """Metric depth -> focal canonical: elementwise scale by f_c / fy."""
    return CanonicalMap(FOCAL, d.values * (cfg.f_c / rig.fy), d.mask.copy())


def vct_to_depth(c: CanonicalMap, rig: CameraRig, cfg: CanonicalConfig,
                 h_ext: float | None = None):
    """Vertical canonical -> metric depth.

    Values are clamped into [0, y_max] before decoding; the number of
    clamped valid pixels is returned as a diagnostic so out-of-range
    regressor outputs are visible without failing the pipeline.

    Returns (DepthMap, n_clamped).
    """
    if c.kind != VERTICAL:
        raise ValueError(f"expected a vertical canonical map, got kind {c.kind!r}")
    if h_ext is None:
        h_ext = extended_height(rig, cfg)
    ym = y_max(rig, cfg, h_ext)
    y = np.clip(c.values, 0.0, ym)
    n_clamped = int(np.count_nonzero((c.values != y) & c.mask))
    cth, sth = np.cos(rig.theta), np.sin(rig.theta)
    d = rig.fy * rig.h / ((h_ext - rig.cy - y) * cth - rig.fy * sth)
    return DepthMap(d, c.mask.copy()), n_clamped


def vct_from_depth(d: DepthMap, rig: CameraRig, cfg: CanonicalConfig,
                   h_ext: float | None = None):
    """Metric depth -> vertical canonical (exact inverse of vct_to_depth).

    Depths are clamped into [d_min_ext, d_max]; returns (CanonicalMap,
    n_clamped).
    """
    if h_ext is None:
        h_ext = extended_height(rig, cfg)
    depth = np.clip(d.values, cfg.d_min_ext, cfg.d_max)
    n_clamped = int(np.count_nonzero((d.values != depth) & d.mask))
    cth, sth = np.cos(rig.theta), np.sin(rig.theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = h_ext - rig.cy - rig.fy * (rig.h / depth + sth) / cth
    y = np.where(d.mask, y, 0.0)
    return CanonicalMap(VERTICAL, y, d.mask.copy()), n_clamped
