"""Uncertainty-weighted fusion of the two cue depth maps.

The fused depth weights each cue by the other cue's uncertainty scale,

    D = (S_y * D_f + S_f * D_y) / (S_y + S_f),

so a cue with large uncertainty contributes little. The scales are
treated as Laplace scales (L1 residual likelihood); the formula is the
same whether they are read as sigma or sigma^2.
"""

from __future__ import annotations

import numpy as np

from .maps import DepthMap, UncertaintyMap, joint_mask

# Lower bound on uncertainty scales; below this on both cues the fusion
# ratio degenerates to 0/0 and the symmetric arithmetic mean is used.
SIGMA_FLOOR = 1e-6


def activate_log_uncertainty(raw, mask=None, sigma_floor: float = SIGMA_FLOOR) -> UncertaintyMap:
    """exp() activation of predicted log-uncertainties, floored at sigma_floor."""
    raw = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise ValueError("log-uncertainty inputs must be finite")
    return UncertaintyMap(np.maximum(np.exp(raw), sigma_floor), mask)


def fuse(d_f: DepthMap, d_y: DepthMap, s_f: UncertaintyMap, s_y: UncertaintyMap,
         sigma_floor: float = SIGMA_FLOOR) -> DepthMap:
    """Per-pixel uncertainty-weighted combination of two depth maps.

    Mask is the intersection of all input masks. Where both scales fall
    at/below sigma_floor the arithmetic mean is used (the symmetric limit
    of the ratio).
    """
    mask = joint_mask(d_f, d_y, s_f, s_y)
    sf, sy = s_f.values, s_y.values
    if np.any((sf < 0) & mask) or np.any((sy < 0) & mask):
        raise ValueError("uncertainty scales must be non-negative")
    degenerate = (sf <= sigma_floor) & (sy <= sigma_floor)
    denom = np.where(degenerate, 1.0, sf + sy)
    fused = np.where(
        degenerate,
        0.5 * (d_f.values + d_y.values),
        (sy * d_f.values + sf * d_y.values) / denom,
    )
    return DepthMap(np.where(mask, fused, 0.0), mask)


def gedepth_combine(attention, d_ground: DepthMap, d_residual: DepthMap) -> DepthMap:
    """Linear ground-attention baseline: D = A * D_g + (1 - A) * D_r."""
    a = np.asarray(attention, dtype=np.float64)
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("attention weights must lie in [0, 1]")
    mask = joint_mask(d_ground, d_residual)
    vals = a * d_ground.values + (1.0 - a) * d_residual.values
    return DepthMap(np.where(mask, vals, 0.0), mask)
