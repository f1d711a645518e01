"""Brute-force reference solver: exhaustive depth search along each pixel ray.

The oracle plays the role of a fully calibrated method: it knows the metric
light positions, sweeps candidate depths along the viewing ray, solves the
inner least squares for the albedo-scaled normal under the chosen fall-off
model, and keeps the depth with the smallest intensity residual. It certifies
the closed-form solver's global-optimality behavior and quantifies how much
of the cubic-data error is due to the fall-off relaxation alone. Speed is a
non-goal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RigNotMetric
from .geometry import CameraIntrinsics, SymmetricRig
from .render import Falloff

_DET_TOL = 1e-12


@dataclass(frozen=True)
class DepthGrid:
    """Uniform candidate depths z_min..z_max inclusive."""

    z_min: float
    z_max: float
    steps: int

    def __post_init__(self):
        if not (0 < self.z_min < self.z_max):
            raise ValueError(f"need 0 < z_min < z_max, got [{self.z_min}, {self.z_max}]")
        if self.steps < 2:
            raise ValueError(f"grid needs at least 2 steps, got {self.steps}")

    @property
    def step(self) -> float:
        return (self.z_max - self.z_min) / (self.steps - 1)

    def values(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.steps)


def default_grid(nominal_distance: float, steps: int = 10_000) -> DepthGrid:
    """Bracket [0.25 l, 2 l] around the configured nominal distance."""
    return DepthGrid(0.25 * nominal_distance, 2.0 * nominal_distance, steps)


@dataclass
class OracleResult:
    best_depth: float
    normal: np.ndarray
    albedo: float
    residual: float


def _solve_3x3(G: np.ndarray, c: np.ndarray):
    """Cramer solve for batches of symmetric 3x3 systems.

    Returns (b, valid); near-singular systems come back invalid.
    """
    a, b_, c_ = G[..., 0, 0], G[..., 0, 1], G[..., 0, 2]
    d, e = G[..., 1, 1], G[..., 1, 2]
    f = G[..., 2, 2]
    det = a * (d * f - e * e) - b_ * (b_ * f - e * c_) + c_ * (b_ * e - d * c_)
    scale = (np.sqrt(np.einsum("...ij,...ij->...", G, G) / 3.0) + 1e-300) ** 3
    valid = np.abs(det) > _DET_TOL * scale
    det_safe = np.where(valid, det, 1.0)
    # adjugate rows applied to the right-hand side
    x0 = (d * f - e * e) * c[..., 0] + (c_ * e - b_ * f) * c[..., 1] + (b_ * e - c_ * d) * c[..., 2]
    x1 = (c_ * e - b_ * f) * c[..., 0] + (a * f - c_ * c_) * c[..., 1] + (b_ * c_ - a * e) * c[..., 2]
    x2 = (b_ * e - c_ * d) * c[..., 0] + (b_ * c_ - a * e) * c[..., 1] + (a * d - b_ * b_) * c[..., 2]
    sol = np.stack([x0, x1, x2], axis=-1) / det_safe[..., None]
    return sol, valid


def _search_rays(
    rays: np.ndarray,
    m: np.ndarray,
    lights: np.ndarray,
    grid: DepthGrid,
    power: int,
    chunk: int,
):
    """Grid search along viewing rays. rays: (N, 3); m: (N, L)."""
    n_pix = rays.shape[0]
    best_resid = np.full(n_pix, np.inf)
    best_z = np.full(n_pix, np.nan)
    best_b = np.full((n_pix, 3), np.nan)
    zs = grid.values()
    for start in range(0, len(zs), chunk):
        zc = zs[start : start + chunk]
        x = zc[:, None, None] * rays[None]  # (D, N, 3)
        t = lights[None, None] - x[:, :, None, :]  # (D, N, L, 3)
        dist = np.linalg.norm(t, axis=-1)
        design = t / dist[..., None] ** power
        G = np.einsum("dnlc,dnle->dnce", design, design)
        rhs = np.einsum("dnlc,nl->dnc", design, m)
        b, valid = _solve_3x3(G, rhs)
        resid = np.einsum("dnlc,dnc->dnl", design, b) - m[None]
        resid = np.einsum("dnl,dnl->dn", resid, resid)
        resid = np.where(valid, resid, np.inf)
        local = np.argmin(resid, axis=0)
        local_resid = np.take_along_axis(resid, local[None], axis=0)[0]
        better = local_resid < best_resid
        best_resid[better] = local_resid[better]
        best_z[better] = zc[local[better]]
        best_b[better] = b[local[better], np.flatnonzero(better)]
    return best_z, best_b, best_resid


def brute_force_image(
    images: np.ndarray,
    rig: SymmetricRig,
    camera: CameraIntrinsics,
    grid: DepthGrid,
    falloff: Falloff = "relaxed",
    mask: np.ndarray | None = None,
    chunk: int = 32,
):
    """Grid search at every masked pixel.

    Returns:
        (depth, normal, albedo, residual) maps; unmasked pixels hold NaN.

    Raises:
        RigNotMetric: The oracle requires absolute light positions.
    """
    if not rig.is_metric:
        raise RigNotMetric("rig not metric: the oracle needs absolute light positions")
    if falloff not in ("cubic", "relaxed"):
        raise ValueError(f"falloff must be 'cubic' or 'relaxed', got {falloff!r}")
    L, H, W = images.shape
    if L != rig.n_lights:
        raise ValueError(f"stack has {L} images but the rig has {rig.n_lights} lights")
    lights = rig.metric_light_positions()
    power = 3 if falloff == "cubic" else 2

    if mask is None:
        mask = np.ones((H, W), dtype=bool)
    idx = np.flatnonzero(np.asarray(mask, bool).ravel())
    ug, vg = camera.pixel_grid()
    rays = np.stack([ug.ravel()[idx], vg.ravel()[idx], np.ones(idx.size)], axis=1)
    m = images.reshape(L, -1)[:, idx].T  # (N, L)
    best_z, best_b, best_resid = _search_rays(rays, m, lights, grid, power, chunk)

    depth = np.full((H, W), np.nan)
    normal = np.full((H, W, 3), np.nan)
    albedo = np.full((H, W), np.nan)
    residual = np.full((H, W), np.nan)
    depth.ravel()[idx] = best_z
    norms = np.linalg.norm(best_b, axis=1)
    safe = norms > 0
    unit = np.full((idx.size, 3), np.nan)
    unit[safe] = best_b[safe] / norms[safe, None]
    normal.reshape(-1, 3)[idx] = unit
    albedo.ravel()[idx] = norms
    residual.ravel()[idx] = best_resid
    return depth, normal, albedo, residual


def brute_force_pixel(
    stack,
    rig: SymmetricRig,
    camera: CameraIntrinsics,
    pixel: tuple[int, int],
    grid: DepthGrid,
    falloff: Falloff = "relaxed",
) -> OracleResult:
    """Exhaustive search at one pixel; returns the grid minimizer.

    Args:
        stack: A PixelStack (only the intensities are used).
    """
    if not rig.is_metric:
        raise RigNotMetric("rig not metric: the oracle needs absolute light positions")
    u, v = pixel
    un, vn = camera.normalized_coords(u, v)
    rays = np.array([[float(un), float(vn), 1.0]])
    m = np.asarray(stack.intensities, dtype=float)[None, :]
    power = 3 if falloff == "cubic" else 2
    best_z, best_b, best_resid = _search_rays(
        rays, m, rig.metric_light_positions(), grid, power, chunk=256
    )
    norm = float(np.linalg.norm(best_b[0]))
    unit = best_b[0] / norm if norm > 0 else np.full(3, np.nan)
    return OracleResult(
        best_depth=float(best_z[0]),
        normal=unit,
        albedo=norm,
        residual=float(best_resid[0]),
    )
