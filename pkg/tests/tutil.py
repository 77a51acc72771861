"""Shared helpers for the test suite."""

import numpy as np

from gvgeom.camera import CameraRig


def example_rig(fx=700.0, fy=700.0, cx=320.0, cy=200.0, H=400, W=640,
                h=1.5, theta=0.0) -> CameraRig:
    return CameraRig(fx=fx, fy=fy, cx=cx, cy=cy, H=H, W=W, h=h, theta=theta)


def random_rig(rng) -> CameraRig:
    """A plausible ground-vehicle rig with the horizon inside the image."""
    return CameraRig(
        fx=rng.uniform(300, 1200),
        fy=rng.uniform(300, 1200),
        cx=rng.uniform(150, 400),
        cy=rng.uniform(150, 400),
        H=int(rng.integers(500, 1001)),
        W=int(rng.integers(400, 1201)),
        h=rng.uniform(1.0, 2.5),
        theta=rng.uniform(-0.03, 0.03),
    )


def smooth_field(u, v):
    """Positive, gently varying depth-like field on continuous coordinates."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return 8.0 + 0.01 * u + 0.015 * v + 0.5 * np.sin(u / 37.0) * np.cos(v / 29.0)
