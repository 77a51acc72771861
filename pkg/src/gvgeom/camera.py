"""Camera parameterization, frame transforms, and ground-plane depth.

Conventions
-----------
Ego frame: x right, y forward, z up, origin on the ground below the camera.
Camera frame: x right, y down, z forward (optical axis).
Pixels: u = column, v = row, continuous coordinates with pixel (u, v)
centered on integer grid points; vertical image position y = H - v.

A camera with height ``h`` above the ground and pitch ``theta`` maps ego
points to camera points via p_C = R (p_E + [0, 0, -h]); under this
convention the ground plane z_E = 0 satisfies (R n_E)^T p_C + h = 0 with
n_E = [0, 0, 1], and the ground depth below the horizon is

    d = fy * h / ((v - cy) cos(theta) - fy sin(theta))
      = fy * h / ((H - cy - y) cos(theta) - fy sin(theta)).

Angles are radians everywhere in this API; config files use degrees.
All functions are pure and accept scalars or arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Denominators smaller than this are treated as at/above the horizon.
DENOM_EPS = 1e-6


@dataclass(frozen=True)
class CameraRig:
    """Pinhole intrinsics plus ground-relative extrinsics (height, pitch)."""

    fx: float
    fy: float
    cx: float
    cy: float
    H: int
    W: int
    h: float
    theta: float  # pitch, radians

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (self.H >= 1 and self.W >= 1):
            raise ValueError("image dimensions must be >= 1")
        if not self.h > 0:
            raise ValueError("camera height must be positive")
        if not abs(self.theta) < math.pi / 2:
            raise ValueError("pitch must satisfy |theta| < pi/2")

    def intrinsic_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.fx, 0.0, self.cx],
                [0.0, self.fy, self.cy],
                [0.0, 0.0, 1.0],
            ]
        )


def rotation_from_pitch(theta: float) -> np.ndarray:
    """Ego-to-camera rotation for a pure pitch angle.

    Rows are the camera axes expressed in the ego frame:
    [[1, 0, 0], [0, sin t, -cos t], [0, cos t, sin t]].
    """
    s, c = np.sin(theta), np.cos(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, s, -c], [0.0, c, s]])


def ego_to_camera(p_ego, rig: CameraRig) -> np.ndarray:
    """Transform ego-frame points (..., 3) into the camera frame."""
    p = np.asarray(p_ego, dtype=np.float64)
    shifted = p + np.array([0.0, 0.0, -rig.h])
    return shifted @ rotation_from_pitch(rig.theta).T


def camera_to_ego(p_cam, rig: CameraRig) -> np.ndarray:
    """Inverse of :func:`ego_to_camera`."""
    p = np.asarray(p_cam, dtype=np.float64)
    return p @ rotation_from_pitch(rig.theta) + np.array([0.0, 0.0, rig.h])


def ground_normal_camera(rig: CameraRig) -> np.ndarray:
    """Upward ground normal expressed in the camera frame: R [0, 0, 1]."""
    return np.array([0.0, -np.cos(rig.theta), np.sin(rig.theta)])


def project(p_cam, rig: CameraRig):
    """Pinhole projection of camera-frame points (..., 3) to pixels (u, v)."""
    p = np.asarray(p_cam, dtype=np.float64)
    z = p[..., 2]
    u = rig.fx * p[..., 0] / z + rig.cx
    v = rig.fy * p[..., 1] / z + rig.cy
    return u, v


def backproject(u, v, z, rig: CameraRig) -> np.ndarray:
    """Lift pixels with known depth Z to camera-frame points.

    X = (u - cx) Z / fx, Y = (v - cy) Z / fy.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    x = (u - rig.cx) * z / rig.fx
    y = (v - rig.cy) * z / rig.fy
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def ground_depth_at_pixel(u, v, rig: CameraRig, *, denom_eps: float = DENOM_EPS,
                          d_max_cap: float | None = None):
    """Depth of the ground plane seen at pixel (u, v), NaN where invalid.

    Invalid means the denominator is <= denom_eps (pixel at or above the
    horizon) or, when d_max_cap is given, the depth exceeds the cap. The
    result never contains negative depths. u is accepted for interface
    symmetry; a pitched-only rig makes the depth a function of v alone.
    """
    v = np.asarray(v, dtype=np.float64)
    c, s = np.cos(rig.theta), np.sin(rig.theta)
    denom = (v - rig.cy) * c - rig.fy * s
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(denom > denom_eps, rig.fy * rig.h / denom, np.nan)
    if d_max_cap is not None:
        d = np.where(d > d_max_cap, np.nan, d)
    if np.ndim(v) == 0:
        return float(d)
    return d


def horizon_row(rig: CameraRig) -> float:
    """Row where the ground-plane depth diverges: v_h = cy + fy tan(theta)."""
    return rig.cy + rig.fy * math.tan(rig.theta)


def rig_to_dict(rig: CameraRig) -> dict:
    """JSON-facing form; pitch is stored in degrees at this boundary."""
    return {
        "fx": rig.fx,
        "fy": rig.fy,
        "cx": rig.cx,
        "cy": rig.cy,
        "H": rig.H,
        "W": rig.W,
        "height_m": rig.h,
        "pitch_deg": math.degrees(rig.theta),
    }


def rig_from_dict(d: dict) -> CameraRig:
    return CameraRig(
        fx=float(d["fx"]),
        fy=float(d["fy"]),
        cx=float(d["cx"]),
        cy=float(d["cy"]),
        H=int(d["H"]),
        W=int(d["W"]),
        h=float(d["height_m"]),
        theta=math.radians(float(d["pitch_deg"])),
    )
