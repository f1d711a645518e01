"""Per-pixel recovery pipeline: scaled distances, position, normal, albedo.

The scaled-distance vector e is the right singular vector of the smallest
singular value of the stacked constraint matrix, with its global sign fixed
so that the (physically positive) components come out positive. From e the
relaxed model gives, per pixel:

* the albedo-scaled squared radius k = rho^-1 r^2 from differences of pair
  sums across distinct radii (mean over all combinations);
* the lateral position (x'_r, y'_r) from 2x2 solves of pair-difference
  equations over all non-parallel pair combinations (mean);
* the depth z'_r from the relaxed distance identity
  e_l / k = (x'_r - sx_l)^2 + (y'_r - sy_l)^2 + z'_r^2, averaged over all
  lights with a non-negative radicand;
* the normal and scaled albedo rho/r from the linear system
  m_l * ||s'_l - x'_r||^2 = (s'_l - x'_r)^T (rho/r n) over all lights.

All positions are in normalized units: x'_r = (x - s_o) / r. Every step is
invariant to the overall scale of e.

Collinear rigs take a reduced path: the lateral position comes from one
pair-difference equation combined with the pixel-ray ratio y'/x' = v'/u'
(valid for z-only offsets), and no normal is attempted since all light
directions are coplanar with the line.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constraints import (
    PRINCIPAL_POINT_TOL,
    ConstraintSystem,
    ConstraintTemplate,
    PixelStack,
    assemble_stacked,
    build_system,
    build_template,
)
from .errors import (
    DegenerateNullSpace,
    EqualRadii,
    NegativeRadicand,
    PrincipalPointDegenerate,
    RankDeficient,
    UnsupportedArrangement,
)
from .geometry import (
    BASIS_TOL,
    ArrangementKind,
    CameraIntrinsics,
    SymmetricRig,
    classify_arrangement,
)

SIGN_TOL = 1e-6  # components below -SIGN_TOL after the global flip conflict
_EQUAL_RATIO_TOL = 1e-12


class SurfelStatus(enum.IntEnum):
    OK = 0
    MASKED = 1
    SHADOWED = 2
    SIGN_CONFLICT = 3
    DEGENERATE = 4


@dataclass
class ScaledDistances:
    """Unit-norm per-light scaled distances at one pixel."""

    e: np.ndarray  # (2 * n_pairs,), unit Euclidean norm
    sign_fixed: bool
    residual: float  # smallest singular value of the stacked system


@dataclass
class Surfel:
    """Recovered per-pixel result in normalized units."""

    x_r: np.ndarray | None  # (x - s_o) / r
    normal: np.ndarray | None  # unit, camera-facing (z < 0); None if unavailable
    scaled_albedo: float  # rho / r
    rho_inv_r2: float  # rho^-1 r^2
    status: SurfelStatus
    residual: float = 0.0


@dataclass
class SurfelMap:
    """Dense per-pixel solver output. Non-OK pixels hold NaN payloads."""

    position: np.ndarray  # (H, W, 3) normalized x'_r
    normal: np.ndarray  # (H, W, 3)
    scaled_albedo: np.ndarray  # (H, W)
    rho_inv_r2: np.ndarray  # (H, W)
    status: np.ndarray  # (H, W) uint8 of SurfelStatus
    residual: np.ndarray  # (H, W)

    @property
    def ok(self) -> np.ndarray:
        return self.status == int(SurfelStatus.OK)

    def depth(self, radius_unit: float | None = None) -> np.ndarray:
        """z'_r map, scaled to scene units when the radius is known."""
        z = self.position[..., 2]
        return z if radius_unit is None else radius_unit * z


# ---------------------------------------------------------------------------
# Scaled-distance estimation
# ---------------------------------------------------------------------------


def _solve_e_batch(M: np.ndarray, rank_tol: float):
    """Null-space solve for a batch of stacked systems.

    Args:
        M: (N, R, 2n) row-normalized constraint matrices.

    Returns:
        e (N, 2n) sign-fixed unit vectors, residual (N,), degenerate (N,),
        sign_conflict (N,).
    """
    N, R, n2 = M.shape
    _, S, Vt = np.linalg.svd(M, full_matrices=True)
    e = Vt[:, -1, :]
    # singular values padded with zeros up to the column count
    sig = np.zeros((N, n2))
    sig[:, : S.shape[1]] = S[:, :n2]
    smallest = sig[:, -1]
    second = sig[:, -2]
    largest = sig[:, 0]
    degenerate = (second - smallest) <= rank_tol * np.maximum(largest, 1e-300)
    degenerate |= largest == 0
    flip = np.sum(e, axis=1) < 0
    e = np.where(flip[:, None], -e, e)
    sign_conflict = np.any(e < -SIGN_TOL, axis=1)
    return e, smallest, degenerate, sign_conflict


def solve_scaled_distances(
    system: ConstraintSystem, rank_tol: float = 1e-8
) -> ScaledDistances:
    """Scaled distances for one pixel from its assembled constraint system.

    Raises:
        DegenerateNullSpace: When the null space has dimension above one
            (the two smallest singular values agree within rank_tol relative
            to the largest), so e is not unique up to scale.
    """
    M = system.stacked()[None]
    e, residual, degenerate, sign_conflict = _solve_e_batch(M, rank_tol)
    if degenerate[0]:
        raise DegenerateNullSpace(
            "constraint system does not pin the scaled distances: null space"
            " dimension exceeds one"
        )
    return ScaledDistances(e=e[0], sign_fixed=True, residual=float(residual[0]))


# ---------------------------------------------------------------------------
# Position recovery
# ---------------------------------------------------------------------------


def _as_e_array(e) -> np.ndarray:
    if isinstance(e, ScaledDistances):
        return np.asarray(e.e, dtype=float)
    return np.asarray(e, dtype=float)


def _k_batch(e: np.ndarray, ratios: np.ndarray):
    """Albedo-scaled squared radius, mean over distinct-radius combinations.

    e: (N, 2n). Returns (N,).
    """
    sums = e[:, 0::2] + e[:, 1::2]  # (N, n)
    vals = []
    n = len(ratios)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(ratios[j] - ratios[i]) < _EQUAL_RATIO_TOL:
                continue
            vals.append((sums[:, j] - sums[:, i]) / (2.0 * (ratios[j] ** 2 - ratios[i] ** 2)))
    if not vals:
        raise EqualRadii(
            "all radius ratios are equal: At least two pairs with different"
            " radii must exist for the surface position estimation"
        )
    return np.mean(vals, axis=0)


def recover_rho_inv_r2(e, rig: SymmetricRig) -> float:
    """rho^-1 r^2 from pair sums; linear in e, positive for physical e.

    Raises:
        EqualRadii: When every pair shares one radius.
    """
    arr = _as_e_array(e)
    return float(_k_batch(arr[None], rig.ratios)[0])


def _xy_batch(e: np.ndarray, k: np.ndarray, template: ConstraintTemplate):
    """Lateral position from pair differences, mean over non-parallel combos."""
    diffs = e[:, 0::2] - e[:, 1::2]  # (N, n)
    sin = template.dir_sin  # ratio * sin(angle)
    cos = template.dir_cos
    n = template.n_pairs
    with np.errstate(divide="ignore", invalid="ignore"):
        c = -diffs / (4.0 * k[:, None])  # (N, n), equals ratio*(x sin + y cos)
    xs, ys = [], []
    for i in range(n):
        for j in range(i + 1, n):
            det = sin[i] * cos[j] - cos[i] * sin[j]
            if abs(det) < BASIS_TOL:
                continue
            xs.append((c[:, i] * cos[j] - c[:, j] * cos[i]) / det)
            ys.append((c[:, j] * sin[i] - c[:, i] * sin[j]) / det)
    if not xs:
        raise DegenerateNullSpace("no non-parallel pair combination for lateral position")
    return np.mean(xs, axis=0), np.mean(ys, axis=0)


def _z_batch(e: np.ndarray, k: np.ndarray, x: np.ndarray, y: np.ndarray, lights: np.ndarray):
    """Depth from the relaxed distance identity, averaged over valid lights.

    Returns (z, n_valid) where lights with a negative radicand are excluded.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        rad = (
            e / k[:, None]
            - (x[:, None] - lights[None, :, 0]) ** 2
            - (y[:, None] - lights[None, :, 1]) ** 2
        )
    valid = rad >= 0
    n_valid = valid.sum(axis=1)
    z = np.where(
        n_valid > 0,
        np.sum(np.sqrt(np.where(valid, rad, 0.0)), axis=1) / np.maximum(n_valid, 1),
        np.nan,
    )
    return z, n_valid


def recover_position(e, rig: SymmetricRig, rho_inv_r2: float) -> np.ndarray:
    """Normalized surface point x'_r = (x - s_o)/r from scaled distances.

    Invariant to the scale of e provided rho_inv_r2 was derived from the
    same e (both are linear in it).

    Raises:
        NegativeRadicand: When the depth radicand is negative for all lights.
    """
    arr = _as_e_array(e)[None]
    template = build_template(rig)
    k = np.array([float(rho_inv_r2)])
    x, y = _xy_batch(arr, k, template)
    z, n_valid = _z_batch(arr, k, x, y, rig.relative_light_positions()[:, :2].reshape(-1, 2))
    if n_valid[0] == 0:
        raise NegativeRadicand(
            "depth radicand negative for every light: relaxation error or"
            " shadow contamination"
        )
    return np.array([x[0], y[0], z[0]])


# ---------------------------------------------------------------------------
# Normal recovery
# ---------------------------------------------------------------------------


def _normals_batch(m: np.ndarray, x_r: np.ndarray, lights: np.ndarray, rank_tol: float):
    """Least squares for b = (rho/r) n over all lights.

    Args:
        m: (N, 2n) intensities; x_r: (N, 3); lights: (2n, 3) relative.

    Returns:
        b (N, 3) and ok (N,) flags (False where the direction matrix has
        numeric rank below 3).
    """
    T = lights[None, :, :] - x_r[:, None, :]  # (N, 2n, 3)
    w = np.sum(T * T, axis=2)  # squared distances
    y = m * w
    G = np.einsum("nlc,nld->ncd", T, T)
    rhs = np.einsum("nlc,nl->nc", T, y)
    eig = np.linalg.eigvalsh(G)
    ok = eig[:, 0] > (rank_tol**2) * np.maximum(eig[:, -1], 1e-300)
    G_safe = np.where(ok[:, None, None], G, np.eye(3)[None])
    b = np.linalg.solve(G_safe, rhs[..., None])[..., 0]
    return b, ok


def recover_normal(stack: PixelStack, rig: SymmetricRig, x_r) -> tuple[np.ndarray, float]:
    """Unit normal and scaled albedo rho/r at one pixel.

    Raises:
        RankDeficient: When the light-direction matrix at this pixel has
            numeric rank below 3 (e.g. collinear rigs).
    """
    x_r = np.asarray(x_r, dtype=float)
    b, ok = _normals_batch(
        stack.intensities[None], x_r[None], rig.relative_light_positions(), 1e-8
    )
    norm = float(np.linalg.norm(b[0]))
    if not ok[0] or norm == 0.0:
        raise RankDeficient(
            "light directions at this pixel span fewer than 3 dimensions"
        )
    return b[0] / norm, norm


# ---------------------------------------------------------------------------
# Per-pixel orchestration
# ---------------------------------------------------------------------------


def solve_pixel(stack: PixelStack, rig: SymmetricRig, rank_tol: float = 1e-8) -> Surfel:
    """Full pipeline at one pixel of a non-collinear solvable rig."""
    system = build_system(rig, stack)
    sd = solve_scaled_distances(system, rank_tol)
    if np.any(sd.e < -SIGN_TOL):
        return Surfel(None, None, math.nan, math.nan, SurfelStatus.SIGN_CONFLICT, sd.residual)
    k = recover_rho_inv_r2(sd, rig)
    if not k > 0:
        return Surfel(None, None, math.nan, math.nan, SurfelStatus.DEGENERATE, sd.residual)
    x_r = recover_position(sd, rig, k)
    normal, albedo = recover_normal(stack, rig, x_r)
    return Surfel(x_r, normal, albedo, k, SurfelStatus.OK, sd.residual)


def solve_collinear(
    stack: PixelStack,
    rig: SymmetricRig,
    camera: CameraIntrinsics,
    pixel: tuple[float, float],
    rank_tol: float = 1e-8,
) -> Surfel:
    """Depth-only recovery for a collinear rig at one off-center pixel.

    The lateral position follows from one pair-difference equation plus the
    pixel-ray ratio y'/x' = v'/u'; no normal is attempted because all light
    directions are coplanar with the line.

    Raises:
        PrincipalPointDegenerate: When u'^2 + v'^2 falls below the
            principal-point tolerance.
    """
    un, vn = camera.normalized_coords(pixel[0], pixel[1])
    un, vn = float(un), float(vn)
    if un**2 + vn**2 < PRINCIPAL_POINT_TOL:
        raise PrincipalPointDegenerate(
            "pixel sits on the principal point: the lateral ratio v'/u' is undefined"
        )
    system = build_system(rig, stack)
    sd = solve_scaled_distances(system, rank_tol)
    if np.any(sd.e < -SIGN_TOL):
        return Surfel(None, None, math.nan, math.nan, SurfelStatus.SIGN_CONFLICT, sd.residual)
    k = recover_rho_inv_r2(sd, rig)
    if not k > 0:
        return Surfel(None, None, math.nan, math.nan, SurfelStatus.DEGENERATE, sd.residual)
    template = build_template(rig)
    x, y, ok = _collinear_xy_batch(sd.e[None], np.array([k]), template, np.array([un]), np.array([vn]))
    if not ok[0]:
        return Surfel(None, None, math.nan, math.nan, SurfelStatus.DEGENERATE, sd.residual)
    z, n_valid = _z_batch(
        sd.e[None], np.array([k]), x, y, rig.relative_light_positions()[:, :2]
    )
    if n_valid[0] == 0:
        raise NegativeRadicand("depth radicand negative for every light")
    return Surfel(np.array([x[0], y[0], z[0]]), None, math.nan, k, SurfelStatus.OK, sd.residual)


def _collinear_xy_batch(e, k, template: ConstraintTemplate, un, vn):
    """Lateral position for collinear rigs via the pixel-ray ratio.

    Each pair difference gives ratio_i*eps_i*(x sin + y cos) = c_i along the
    shared line direction; combined with (x, y) = t (u', v') this pins t.
    Returns (x, y, ok) with ok False where the ray is perpendicular to the
    line (t = c / denom is 0/0) or c disagrees in sign availability.
    """
    diffs = e[:, 0::2] - e[:, 1::2]
    sin0 = template.dir_sin[0]
    cos0 = template.dir_cos[0]
    n = template.n_pairs
    eps = np.ones(n)
    # dir_sin/cos store ratio-scaled direction; recover each pair's signed
    # projection onto pair 0's unit direction.
    d0 = math.hypot(sin0, cos0)
    u0, c0 = sin0 / d0, cos0 / d0
    proj = template.dir_sin * u0 + template.dir_cos * c0  # ratio_i * eps_i
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.mean(-diffs / (4.0 * k[:, None] * proj[None, :]), axis=1)  # x u0 + y c0
    denom = un * u0 + vn * c0
    ok = np.abs(denom) > 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ok, c / np.where(ok, denom, 1.0), np.nan)
    return t * un, t * vn, ok


def solve_image(
    images: np.ndarray,
    rig: SymmetricRig,
    camera: CameraIntrinsics,
    mask: np.ndarray | None = None,
    shadow_threshold: float = 1e-4,
    rank_tol: float = 1e-8,
) -> SurfelMap:
    """Apply the per-pixel pipeline to every valid pixel of an image stack.

    Args:
        images: (2 * n_pairs, H, W) intensities in pair order.
        mask: Optional validity mask; invalid pixels are flagged, not solved.
        shadow_threshold: A pixel is flagged shadowed when any intensity
            falls below shadow_threshold times its stack maximum.

    Returns:
        A SurfelMap; every pixel carries a status and failed pixels hold NaN.

    Raises:
        UnsupportedArrangement: For ring or otherwise insufficient rigs.
    """
    cls = classify_arrangement(rig)
    if not cls.solvable:
        raise UnsupportedArrangement(cls.diagnostic)
    collinear = cls.kind is ArrangementKind.COLLINEAR_DEPTH_ONLY

    L, H, W = images.shape
    if L != rig.n_lights:
        raise ValueError(f"stack has {L} images but the rig has {rig.n_lights} lights")
    if (H, W) != (camera.height, camera.width):
        raise ValueError("image size does not match the camera intrinsics")

    status = np.full((H, W), int(SurfelStatus.OK), dtype=np.uint8)
    if mask is None:
        mask = np.ones((H, W), dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
    status[~mask] = int(SurfelStatus.MASKED)

    flat = images.reshape(L, -1)
    peak = flat.max(axis=0)
    shadowed = (flat.min(axis=0) < shadow_threshold * peak) | (peak <= 0)
    shadowed = shadowed.reshape(H, W) & mask
    status[shadowed] = int(SurfelStatus.SHADOWED)

    solve_mask = mask & ~shadowed
    idx = np.flatnonzero(solve_mask.ravel())

    position = np.full((H, W, 3), np.nan)
    normal = np.full((H, W, 3), np.nan)
    albedo = np.full((H, W), np.nan)
    k_map = np.full((H, W), np.nan)
    residual = np.full((H, W), np.nan)
    out = SurfelMap(position, normal, albedo, k_map, status, residual)
    if idx.size == 0:
        return out

    template = build_template(rig)
    ug, vg = camera.pixel_grid()
    un = ug.ravel()[idx]
    vn = vg.ravel()[idx]
    m = flat[:, idx]

    M = assemble_stacked(template, m, un, vn)
    e, resid, degenerate, sign_conflict = _solve_e_batch(M, rank_tol)
    residual.ravel()[idx] = resid

    k = _k_batch(e, rig.ratios)
    bad_k = ~(k > 0)
    if collinear:
        x, y, xy_ok = _collinear_xy_batch(e, k, template, un, vn)
        xy_ok &= un**2 + vn**2 >= PRINCIPAL_POINT_TOL
    else:
        x, y = _xy_batch(e, k, template)
        xy_ok = np.isfinite(x) & np.isfinite(y)
    lights = rig.relative_light_positions()
    z, n_valid = _z_batch(e, k, x, y, lights[:, :2])
    pos_ok = ~degenerate & ~sign_conflict & ~bad_k & xy_ok & (n_valid > 0) & (z > 0)

    pix_status = np.full(idx.shape, int(SurfelStatus.OK), dtype=np.uint8)
    pix_status[~pos_ok] = int(SurfelStatus.DEGENERATE)
    pix_status[sign_conflict] = int(SurfelStatus.SIGN_CONFLICT)
    pix_status[degenerate] = int(SurfelStatus.DEGENERATE)

    xyz = np.stack([x, y, z], axis=1)
    ok_now = pix_status == int(SurfelStatus.OK)

    if not collinear:
        b, normal_ok = _normals_batch(m.T[ok_now], xyz[ok_now], lights, rank_tol)
        bn = np.linalg.norm(b, axis=1)
        normal_ok &= bn > 0
        sub_status = np.where(normal_ok, int(SurfelStatus.OK), int(SurfelStatus.DEGENERATE))
        pix_status[ok_now] = sub_status
        n_unit = np.full((idx.size, 3), np.nan)
        alb = np.full(idx.size, np.nan)
        sel = np.flatnonzero(ok_now)[normal_ok]
        n_unit[sel] = b[normal_ok] / bn[normal_ok, None]
        alb[sel] = bn[normal_ok]
        normal.reshape(-1, 3)[idx] = n_unit
        albedo.ravel()[idx] = alb

    final_ok = pix_status == int(SurfelStatus.OK)
    pos_flat = np.full((idx.size, 3), np.nan)
    pos_flat[final_ok] = xyz[final_ok]
    position.reshape(-1, 3)[idx] = pos_flat
    k_flat = np.full(idx.size, np.nan)
    k_flat[final_ok] = k[final_ok]
    k_map.ravel()[idx] = k_flat
    status.ravel()[idx] = pix_status
    return out
