"""Synthetic Lambertian renderer with metric point lights and ground truth.

Shading model per light s and surface point x with outward normal n and
albedo rho:

    cubic   falloff:  m = rho * (s - x)^T n / ||s - x||^3
    relaxed falloff:  m = rho * (s - x)^T n / ||s - x||^2

Pixels whose surface faces away from ANY light ((s - x)^T n <= 0) are masked
out of the valid region (attached-shadow masking). Cast shadows and
inter-reflections are not simulated. All lights share one radiance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import NoIntersection, RigNotMetric
from .geometry import CameraIntrinsics, SymmetricRig

Falloff = Literal["cubic", "relaxed"]


@dataclass(frozen=True)
class Scene:
    """Parametric scene in the camera frame (camera at origin, +z forward).

    kind "plane": plane through [0, 0, depth] with the given unit normal
    (default fronto-parallel [0, 0, -1]).
    kind "sphere": center and radius in scene units.
    kind "heightfield": per-pixel depth grid matching the render camera.

    albedo is a positive scalar or a per-pixel map in (0, 1].
    """

    kind: Literal["plane", "sphere", "heightfield"]
    albedo: float | np.ndarray = 1.0
    depth: float | None = None
    normal: tuple[float, float, float] | None = None
    center: tuple[float, float, float] | None = None
    radius: float | None = None
    depth_map: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "plane":
            if self.depth is None or self.depth <= 0:
                raise ValueError("plane scene needs a positive depth")
            n = np.array([0.0, 0.0, -1.0] if self.normal is None else self.normal, dtype=float)
            n = n / np.linalg.norm(n)
            if n[2] > 0:
                n = -n
            object.__setattr__(self, "normal", tuple(n))
        elif self.kind == "sphere":
            if self.center is None or self.radius is None or self.radius <= 0:
                raise ValueError("sphere scene needs a center and a positive radius")
            object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        elif self.kind == "heightfield":
            if self.depth_map is None:
                raise ValueError("heightfield scene needs a depth_map")
            dm = np.asarray(self.depth_map, dtype=float)
            if dm.ndim != 2 or np.any(dm <= 0):
                raise ValueError("heightfield depth_map must be a 2D grid of positive depths")
            object.__setattr__(self, "depth_map", dm)
        else:
            raise ValueError(f"unknown scene kind {self.kind!r}")
        if np.isscalar(self.albedo):
            if self.albedo <= 0:
                raise ValueError("albedo must be positive")
        else:
            a = np.asarray(self.albedo, dtype=float)
            if np.any(a <= 0) or np.any(a > 1):
                raise ValueError("albedo map values must lie in (0, 1]")
            object.__setattr__(self, "albedo", a)


@dataclass
class RenderedStack:
    """Renderer output: intensity stack plus ground truth.

    images are ordered (pair 0 +, pair 0 -, pair 1 +, ...). gt_normal is
    unit-norm wherever mask is true; gt_depth holds the camera-frame z.
    """

    images: np.ndarray  # (2*n_pairs, H, W)
    gt_normal: np.ndarray  # (H, W, 3)
    gt_depth: np.ndarray  # (H, W)
    mask: np.ndarray  # (H, W) bool
    albedo: np.ndarray = field(default=None, repr=False)  # (H, W)

    @property
    def n_pairs(self) -> int:
        return self.images.shape[0] // 2


def _geometry_maps(scene: Scene, camera: CameraIntrinsics):
    """Per-pixel surface point, outward normal, and hit mask."""
    un, vn = camera.pixel_grid()
    rays = np.stack([un, vn, np.ones_like(un)], axis=-1)  # (H, W, 3)

    if scene.kind == "plane":
        n = np.asarray(scene.normal)
        anchor = np.array([0.0, 0.0, scene.depth])
        denom = rays @ n
        hit = denom < 0  # ray heading into the front face
        t = np.where(hit, (anchor @ n) / np.where(hit, denom, 1.0), np.nan)
        hit &= t > 0
        points = t[..., None] * rays
        normals = np.broadcast_to(n, points.shape).copy()
        return points, normals, hit

    if scene.kind == "sphere":
        c = np.asarray(scene.center)
        r = scene.radius
        a = np.sum(rays * rays, axis=-1)
        b = -2.0 * rays @ c
        disc = b * b - 4 * a * (c @ c - r * r)
        hit = disc >= 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t = (-b - sq) / (2 * a)  # near intersection
        hit &= t > 0
        points = t[..., None] * rays
        normals = (points - c) / r
        return points, normals, hit

    # heightfield: depth defined along each pixel ray
    dm = scene.depth_map
    if dm.shape != (camera.height, camera.width):
        raise ValueError(
            f"heightfield grid {dm.shape} does not match camera"
            f" {camera.height}x{camera.width}"
        )
    points = dm[..., None] * rays
    # Central differences of the 3D position map; one-sided at borders.
    du = np.gradient(points, axis=1)
    dv = np.gradient(points, axis=0)
    normals = np.cross(du, dv)
    norms = np.linalg.norm(normals, axis=-1, keepdims=True)
    ok = norms[..., 0] > 0
    normals = np.where(ok[..., None], normals / np.where(norms > 0, norms, 1.0), 0.0)
    # orient toward the camera
    flip = np.sum(normals * rays, axis=-1) > 0
    normals[flip] *= -1.0
    return points, normals, ok


def ray_surface_point(camera: CameraIntrinsics, pixel: tuple[int, int], scene: Scene):
    """Surface point and outward unit normal seen by one pixel.

    Args:
        pixel: (u, v) pixel coordinates.

    Raises:
        NoIntersection: When the pixel ray misses the scene.
    """
    points, normals, hit = _geometry_maps(scene, camera)
    u, v = pixel
    if not hit[v, u]:
        raise NoIntersection(f"ray through pixel {pixel} misses the scene")
    return points[v, u].copy(), normals[v, u].copy()


def render(
    scene: Scene, rig: SymmetricRig, camera: CameraIntrinsics, falloff: Falloff = "relaxed"
) -> RenderedStack:
    """Render the intensity stack and ground-truth maps for a metric rig.

    Raises:
        RigNotMetric: When the rig lacks absolute_radius or offset_truth.
    """
    if falloff not in ("cubic", "relaxed"):
        raise ValueError(f"falloff must be 'cubic' or 'relaxed', got {falloff!r}")
    if not rig.is_metric:
        raise RigNotMetric("rig not metric: absolute_radius and offset_truth are required")
    lights = rig.metric_light_positions()  # (L, 3)
    points, normals, hit = _geometry_maps(scene, camera)
    albedo = (
        np.full(hit.shape, float(scene.albedo))
        if np.isscalar(scene.albedo)
        else np.asarray(scene.albedo, dtype=float)
    )
    if albedo.shape != hit.shape:
        raise ValueError(f"albedo map {albedo.shape} does not match image {hit.shape}")

    to_light = lights[:, None, None, :] - points[None]  # (L, H, W, 3)
    dist = np.linalg.norm(to_light, axis=-1)
    shading = np.einsum("lhwc,hwc->lhw", to_light, normals)
    lit = np.all(shading > 0, axis=0)  # attached-shadow masking
    mask = hit & lit & np.isfinite(points).all(axis=-1)

    power = 3 if falloff == "cubic" else 2
    with np.errstate(invalid="ignore", divide="ignore"):
        images = albedo[None] * shading / dist**power
    images = np.where(mask[None], images, 0.0)

    gt_normal = np.where(mask[..., None], normals, 0.0)
    gt_depth = np.where(mask, points[..., 2], 0.0)
    return RenderedStack(
        images=images,
        gt_normal=gt_normal,
        gt_depth=gt_depth,
        mask=mask,
        albedo=np.where(mask, albedo, 0.0),
    )


def quantize(images: np.ndarray, bits: int = 12, white_level: float | None = None) -> np.ndarray:
    """Quantize intensities to the given bit depth, mirroring a real sensor.

    white_level defaults to the stack maximum; values above it clip.
    """
    if white_level is None:
        white_level = float(np.max(images))
    if white_level <= 0:
        return np.zeros_like(images)
    levels = 2**bits - 1
    codes = np.round(np.clip(images / white_level, 0.0, 1.0) * levels)
    return codes / levels * white_level


def add_sensor_noise(
    images: np.ndarray, shot_scale: float, read_sigma: float, rng: np.random.Generator
) -> np.ndarray:
    """Add shot noise (variance proportional to signal) and readout noise.

    Both parameters are camera-specific and must be supplied by the caller;
    there are no meaningful defaults.
    """
    variance = shot_scale * np.clip(images, 0.0, None) + read_sigma**2
    return images + rng.normal(size=images.shape) * np.sqrt(variance)
