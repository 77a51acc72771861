"""File formats: PFM float maps and JSON configs.

PFM layout: ASCII header line "Pf", a "W H" dimensions line, a scale line
whose sign encodes endianness (negative = little-endian), then W*H 32-bit
IEEE floats stored bottom row first. Invalid pixels are encoded as 0.0.
Angles in JSON files are degrees; the in-memory API uses radians.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .augment import AugmentSpec
from .camera import CameraRig, rig_from_dict, rig_to_dict
from .canonical import CanonicalConfig, extended_height, y_max
from .maps import CanonicalMap, DepthMap
from .synth import SceneSpec, scene_from_dict, scene_to_dict


def write_pfm(path, values: np.ndarray, scale: float = -1.0) -> None:
    """Write a single-channel float map; little-endian when scale < 0."""
    if scale == 0:
        raise ValueError("pfm: scale must be nonzero")
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError("pfm: only single-channel 2-D maps are supported")
    h, w = arr.shape
    data = np.flipud(arr).astype("<f4" if scale < 0 else ">f4")
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(f"{scale:.6f}\n".encode("ascii"))
        f.write(data.tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a single-channel PFM into a top-to-bottom float32 array."""
    with open(path, "rb") as f:
        header = f.readline().rstrip()
        if header != b"Pf":
            raise ValueError(f"pfm: bad header {header!r}, expected b'Pf'")
        dims = f.readline().split()
        if len(dims) != 2:
            raise ValueError("pfm: malformed dimensions line")
        try:
            w, h = int(dims[0]), int(dims[1])
        except ValueError as exc:
            raise ValueError("pfm: malformed dimensions line") from exc
        if w < 1 or h < 1:
            raise ValueError("pfm: non-positive dimensions")
        try:
            scale = float(f.readline())
        except ValueError as exc:
            raise ValueError("pfm: malformed scale line") from exc
        if scale == 0:
            raise ValueError("pfm: zero scale")
        payload = f.read(4 * w * h)
        if len(payload) != 4 * w * h:
            raise ValueError(
                f"pfm: truncated payload, expected {4 * w * h} bytes, got {len(payload)}")
    data = np.frombuffer(payload, dtype="<f4" if scale < 0 else ">f4")
    return np.flipud(data.reshape(h, w)).copy()


def write_depth_map(path, m: DepthMap) -> None:
    write_pfm(path, np.where(m.mask, m.values, 0.0))


def read_depth_map(path) -> DepthMap:
    values = read_pfm(path).astype(np.float64)
    return DepthMap(values, values != 0.0)


def write_mask(path, mask: np.ndarray) -> None:
    write_pfm(path, np.asarray(mask, dtype=np.float32))


def read_mask(path) -> np.ndarray:
    return read_pfm(path) != 0.0


def rig_hash(rig: CameraRig) -> str:
    blob = json.dumps(rig_to_dict(rig), sort_keys=True).encode("ascii")
    return hashlib.sha256(blob).hexdigest()[:16]


def write_canonical_map(path, m: CanonicalMap, rig: CameraRig,
                        cfg: CanonicalConfig) -> None:
    """Write the values as PFM plus a one-line JSON sidecar (<path>.json)."""
    write_pfm(path, np.where(m.mask, m.values, 0.0))
    sidecar = {
        "kind": m.kind,
        "rig_hash": rig_hash(rig),
        "h_ext": extended_height(rig, cfg),
        "y_max": y_max(rig, cfg),
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar) + "\n")


def read_canonical_map(path, kind: str) -> CanonicalMap:
    values = read_pfm(path).astype(np.float64)
    return CanonicalMap(kind, values, values != 0.0)


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def save_json(path, obj: dict) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_rig(path) -> CameraRig:
    return rig_from_dict(load_json(path))


def save_rig(path, rig: CameraRig) -> None:
    save_json(path, rig_to_dict(rig))


def load_scene(path) -> SceneSpec:
    return scene_from_dict(load_json(path))


def save_scene(path, scene: SceneSpec) -> None:
    save_json(path, scene_to_dict(scene))


def load_augment_spec(path) -> AugmentSpec:
    return AugmentSpec.from_dict(load_json(path))


def save_augment_spec(path, spec: AugmentSpec) -> None:
    save_json(path, spec.to_dict())
