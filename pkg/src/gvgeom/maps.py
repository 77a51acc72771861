"""Dense map containers shared across the toolkit.

All maps are (H, W) float64 value arrays paired with a boolean validity
mask. Values at invalid pixels are meaningless (the file format encodes
them as 0.0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FOCAL = "focal"
VERTICAL = "vertical"


def _as_map_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"map values must be 2-D (H, W), got shape {arr.shape}")
    return arr


def _as_mask(mask, shape) -> np.ndarray:
    if mask is None:
        return np.ones(shape, dtype=bool)
    m = np.asarray(mask, dtype=bool)
    if m.shape != shape:
        raise ValueError(f"mask shape {m.shape} does not match values shape {shape}")
    return m


@dataclass
class DepthMap:
    """Metric depth in meters along the camera optical axis."""

    values: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = _as_map_array(self.values)
        self.mask = _as_mask(self.mask, self.values.shape)

    @property
    def shape(self):
        return self.values.shape

    def valid_values(self) -> np.ndarray:
        return self.values[self.mask]


@dataclass
class CanonicalMap:
    """Camera-disentangled prediction space.

    kind "focal": depths in meters at the canonical focal length.
    kind "vertical": ground-projection vertical positions in extended-image
    pixels, bounded to [0, y_max].
    """

    kind: str
    values: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind not in (FOCAL, VERTICAL):
            raise ValueError(f"unknown canonical kind {self.kind!r}")
        self.values = _as_map_array(self.values)
        self.mask = _as_mask(self.mask, self.values.shape)

    @property
    def shape(self):
        return self.values.shape


@dataclass
class UncertaintyMap:
    """Per-pixel positive error scales (Laplace-scale interpretation, meters)."""

    values: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = _as_map_array(self.values)
        self.mask = _as_mask(self.mask, self.values.shape)

    @property
    def shape(self):
        return self.values.shape


def joint_mask(*maps) -> np.ndarray:
    """Intersection of the validity masks of all given maps."""
    if not maps:
        raise ValueError("joint_mask needs at least one map")
    shape = maps[0].shape
    out = np.ones(shape, dtype=bool)
    for m in maps:
        if m.shape != shape:
            raise ValueError(f"shape mismatch: {m.shape} vs {shape}")
        out &= m.mask
    return out
