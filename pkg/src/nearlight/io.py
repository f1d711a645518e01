"""File formats: PFM float maps, PNG masks/visualizations, JSON configs.

PFM layout: a "Pf" (1 channel) or "PF" (3 channel) header line, a
"width height" line, then a scale line whose sign encodes endianness
(negative = little endian). Rows are stored bottom-to-top. Writing always
emits little-endian float32 with scale -1.0; reading accepts both
endiannesses.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError
from .geometry import CameraIntrinsics, OffsetMode, SymmetricPair, SymmetricRig

# ---------------------------------------------------------------------------
# PFM
# ---------------------------------------------------------------------------


def write_pfm(path, image: np.ndarray) -> None:
    """Write a (H, W) or (H, W, 3) float map as little-endian PFM."""
    image = np.asarray(image)
    if image.ndim == 2:
        header = b"Pf"
    elif image.ndim == 3 and image.shape[2] == 3:
        header = b"PF"
    else:
        raise ValueError(f"PFM needs (H, W) or (H, W, 3), got shape {image.shape}")
    data = np.flipud(image).astype("<f4")
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{image.shape[1]} {image.shape[0]}\n".encode())
        f.write(b"-1.0\n")
        f.write(data.tobytes())


def _read_header_line(f) -> str:
    line = b""
    while True:
        c = f.read(1)
        if not c:
            raise ValueError("unexpected end of PFM header")
        if c == b"\n":
            return line.decode("ascii")
        line += c


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into a float32 array, (H, W) or (H, W, 3)."""
    with open(path, "rb") as f:
        tag = _read_header_line(f)
        if tag == "PF":
            channels = 3
        elif tag == "Pf":
            channels = 1
        else:
            raise ValueError(f"not a PFM file: header {tag!r}")
        dims = _read_header_line(f).split()
        if len(dims) != 2:
            raise ValueError(f"malformed PFM dimensions line: {dims}")
        width, height = int(dims[0]), int(dims[1])
        scale = float(_read_header_line(f))
        dtype = "<f4" if scale < 0 else ">f4"
        count = width * height * channels
        buf = f.read(count * 4)
        if len(buf) != count * 4:
            raise ValueError("truncated PFM payload")
        data = np.frombuffer(buf, dtype=dtype).astype(np.float32, copy=True)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return np.flipud(data.reshape(shape)).copy()


# ---------------------------------------------------------------------------
# PNG masks, statuses, normal visualization
# ---------------------------------------------------------------------------


def write_mask_png(path, mask: np.ndarray) -> None:
    """Write a boolean mask as 8-bit PNG, 255 = valid."""
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path)


def read_mask_png(path) -> np.ndarray:
    img = np.asarray(Image.open(path).convert("L"))
    return img >= 128


def write_status_png(path, status: np.ndarray) -> None:
    """Write per-pixel status codes as an 8-bit PNG."""
    Image.fromarray(status.astype(np.uint8), mode="L").save(path)


def read_status_png(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("L")).copy()


def write_normal_vis_png(path, normal: np.ndarray) -> None:
    """Standard normal-map colorization: RGB = ((nx+1)/2, (ny+1)/2, (-nz+1)/2).

    The camera looks toward +z, so camera-facing surfaces (nz < 0) render
    blue-dominant. Non-finite normals render black.
    """
    n = np.array(normal, dtype=np.float64)
    bad = ~np.all(np.isfinite(n), axis=-1)
    n[bad] = 0.0
    rgb = np.stack([(n[..., 0] + 1) / 2, (n[..., 1] + 1) / 2, (-n[..., 2] + 1) / 2], axis=-1)
    rgb[bad] = 0.0
    Image.fromarray(np.clip(rgb * 255, 0, 255).astype(np.uint8), mode="RGB").save(path)


# ---------------------------------------------------------------------------
# JSON configs
# ---------------------------------------------------------------------------

_RIG_KEYS = {"pairs", "offset_mode", "absolute_radius", "offset_truth"}
_PAIR_KEYS = {"radius_ratio", "angle_deg"}
_CAMERA_KEYS = {"fx", "fy", "cx", "cy", "width", "height"}
_OFFSET_MODES = {"none": OffsetMode.NONE, "z": OffsetMode.Z_ONLY, "xyz": OffsetMode.XYZ}


def _check_keys(doc: dict, allowed: set, what: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key in {what} config: {sorted(unknown)[0]!r}")


def rig_from_dict(doc: dict) -> SymmetricRig:
    """Parse a rig configuration dictionary; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise ConfigError("rig config must be a JSON object")
    _check_keys(doc, _RIG_KEYS, "rig")
    if "pairs" not in doc:
        raise ConfigError("rig config missing key 'pairs'")
    pairs = []
    for i, p in enumerate(doc["pairs"]):
        if not isinstance(p, dict):
            raise ConfigError(f"rig pairs[{i}] must be an object")
        _check_keys(p, _PAIR_KEYS, f"rig pairs[{i}]")
        try:
            pairs.append(
                SymmetricPair(float(p["radius_ratio"]), math.radians(float(p["angle_deg"])))
            )
        except KeyError as exc:
            raise ConfigError(f"rig pairs[{i}] missing key {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"rig pairs[{i}] invalid: {exc}") from exc
    mode_name = doc.get("offset_mode", "z")
    if mode_name not in _OFFSET_MODES:
        raise ConfigError(
            f"rig offset_mode must be one of {sorted(_OFFSET_MODES)}, got {mode_name!r}"
        )
    offset_truth = doc.get("offset_truth")
    if offset_truth is not None:
        offset_truth = tuple(float(v) for v in offset_truth)
        if len(offset_truth) != 3:
            raise ConfigError("rig offset_truth must be a 3-vector")
    absolute_radius = doc.get("absolute_radius")
    try:
        return SymmetricRig(
            tuple(pairs),
            _OFFSET_MODES[mode_name],
            None if absolute_radius is None else float(absolute_radius),
            offset_truth,
        )
    except ValueError as exc:
        raise ConfigError(f"rig pairs invalid: {exc}") from exc


def rig_to_dict(rig: SymmetricRig) -> dict:
    doc = {
        "pairs": [
            {"radius_ratio": p.radius_ratio, "angle_deg": math.degrees(p.angle)}
            for p in rig.pairs
        ],
        "offset_mode": rig.offset_mode.value,
    }
    if rig.absolute_radius is not None:
        doc["absolute_radius"] = rig.absolute_radius
    if rig.offset_truth is not None:
        doc["offset_truth"] = list(rig.offset_truth)
    return doc


def camera_from_dict(doc: dict) -> CameraIntrinsics:
    if not isinstance(doc, dict):
        raise ConfigError("camera config must be a JSON object")
    _check_keys(doc, _CAMERA_KEYS, "camera")
    try:
        return CameraIntrinsics(
            fx=float(doc["fx"]),
            fy=float(doc["fy"]),
            cx=float(doc["cx"]),
            cy=float(doc["cy"]),
            width=int(doc["width"]),
            height=int(doc["height"]),
        )
    except KeyError as exc:
        raise ConfigError(f"camera config missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"camera config invalid: {exc}") from exc


def camera_to_dict(camera: CameraIntrinsics) -> dict:
    return {
        "fx": camera.fx,
        "fy": camera.fy,
        "cx": camera.cx,
        "cy": camera.cy,
        "width": camera.width,
        "height": camera.height,
    }


def load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def save_json(path, doc: dict) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_rig(path) -> SymmetricRig:
    return rig_from_dict(load_json(path))


def load_camera(path) -> CameraIntrinsics:
    return camera_from_dict(load_json(path))


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

_MANIFEST_KEYS = {"images", "camera", "mask", "provenance"}


def manifest_to_dict(
    image_entries: list[dict], camera: CameraIntrinsics, mask_path: str, provenance: dict
) -> dict:
    return {
        "images": image_entries,
        "camera": camera_to_dict(camera),
        "mask": mask_path,
        "provenance": provenance,
    }


def load_manifest(path, n_pairs: int | None = None):
    """Load a dataset manifest and its referenced files.

    Returns:
        (images, mask, camera, doc): images is a (2*n_pairs, H, W) float64
        stack ordered (pair 0 +, pair 0 -, pair 1 +, ...).

    Raises:
        ConfigError: On schema violations, image-count mismatch, or entries
            out of pair order.
        FileNotFoundError: When a referenced file is missing.
    """
    path = Path(path)
    doc = load_json(path)
    if not isinstance(doc, dict):
        raise ConfigError("manifest must be a JSON object")
    _check_keys(doc, _MANIFEST_KEYS, "manifest")
    for key in ("images", "camera", "mask"):
        if key not in doc:
            raise ConfigError(f"manifest missing key {key!r}")
    camera = camera_from_dict(doc["camera"])
    entries = doc["images"]
    if n_pairs is not None and len(entries) != 2 * n_pairs:
        raise ConfigError(
            f"manifest lists {len(entries)} images but the rig has"
            f" {2 * n_pairs} lights"
        )
    base = path.parent
    images = []
    for i, entry in enumerate(entries):
        _check_keys(entry, {"path", "pair", "sign"}, f"manifest images[{i}]")
        expect_pair, expect_sign = divmod(i, 2)
        sign = entry.get("sign")
        if entry.get("pair") != expect_pair or sign != ("+", "-")[expect_sign]:
            raise ConfigError(
                f"manifest images[{i}] out of order: expected pair {expect_pair}"
                f" sign {('+', '-')[expect_sign]!r}"
            )
        img = read_pfm(base / entry["path"])
        if img.ndim != 2:
            raise ConfigError(f"manifest images[{i}] is not a single-channel map")
        images.append(img.astype(np.float64))
    stack = np.stack(images, axis=0)
    if stack.shape[1:] != (camera.height, camera.width):
        raise ConfigError(
            f"image shape {stack.shape[1:]} does not match camera"
            f" {camera.height}x{camera.width}"
        )
    mask = read_mask_png(base / doc["mask"])
    return stack, mask, camera, doc
