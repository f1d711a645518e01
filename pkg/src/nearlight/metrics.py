"""Evaluation metrics: angular normal error and aligned relative depth error.

Depth estimates carry scale/shift ambiguities depending on what the rig
exposes, so depth maps are affinely aligned to the ground truth before the
relative error is computed. The same alignment is applied to every method
under comparison. Reductions use numpy's pairwise summation, so reports are
bit-reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit


def angular_error(n_est: np.ndarray, n_gt: np.ndarray) -> np.ndarray:
    """Angle between normals in degrees; broadcasts over leading axes.

    Both inputs are defensively renormalized.
    """
    a = np.asarray(n_est, dtype=float)
    b = np.asarray(n_gt, dtype=float)
    a = a / np.linalg.norm(a, axis=-1, keepdims=True)
    b = b / np.linalg.norm(b, axis=-1, keepdims=True)
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    return np.degrees(np.arccos(dot))


def align_depth(
    z_est: np.ndarray, z_gt: np.ndarray, mask: np.ndarray, fit_scale: bool = True
):
    """Least-squares affine alignment a*z_est + b of an estimate to the truth.

    Args:
        fit_scale: When False, fit only the shift (a = 1).

    Returns:
        (a, b, z_aligned).

    Raises:
        DegenerateFit: Fewer than 2 masked pixels, or constant z_est over the
            mask when fitting the scale.
    """
    mask = np.asarray(mask, dtype=bool)
    ze = np.asarray(z_est, dtype=float)[mask]
    zg = np.asarray(z_gt, dtype=float)[mask]
    if ze.size < 2:
        raise DegenerateFit(f"alignment needs >= 2 masked pixels, got {ze.size}")
    if fit_scale:
        ze_mean = ze.mean()
        zg_mean = zg.mean()
        var = np.sum((ze - ze_mean) ** 2)
        if var <= 0 or not np.isfinite(var):
            raise DegenerateFit("z_est is constant over the mask; scale is unidentifiable")
        a = float(np.sum((ze - ze_mean) * (zg - zg_mean)) / var)
        if a == 0.0:
            raise DegenerateFit("fitted scale is zero; estimate carries no depth signal")
        b = float(zg_mean - a * ze_mean)
    else:
        a = 1.0
        b = float(np.mean(zg - ze))
    return a, b, a * np.asarray(z_est, dtype=float) + b


def rel_abs_depth_error(z_aligned: np.ndarray, z_gt: np.ndarray, mask: np.ndarray):
    """Mean of |z_aligned - z_gt| / z_gt over the mask, plus the per-pixel map."""
    mask = np.asarray(mask, dtype=bool)
    err_map = np.zeros(np.asarray(z_gt).shape, dtype=float)
    err_map[mask] = np.abs(z_aligned[mask] - z_gt[mask]) / z_gt[mask]
    mean = float(err_map[mask].mean()) if mask.any() else float("nan")
    return mean, err_map


@dataclass
class EvalReport:
    """Evaluation summary over the intersection of estimate and truth masks."""

    mean_angular_error_deg: float
    mean_rel_abs_depth_error: float
    scale: float
    shift: float
    pixel_count: int
    angular_error_map: np.ndarray
    depth_error_map: np.ndarray

    def to_dict(self) -> dict:
        def _num(x):
            return None if not np.isfinite(x) else float(x)

        return {
            "mean_angular_error_deg": _num(self.mean_angular_error_deg),
            "mean_rel_abs_depth_error": _num(self.mean_rel_abs_depth_error),
            "scale": float(self.scale),
            "shift": float(self.shift),
            "pixel_count": int(self.pixel_count),
        }


def evaluate(
    normal_est: np.ndarray | None,
    depth_est: np.ndarray,
    normal_gt: np.ndarray | None,
    depth_gt: np.ndarray,
    mask: np.ndarray,
    fit_scale: bool = True,
) -> EvalReport:
    """Full evaluation: align depth, then report both error metrics.

    A pixel contributes only where the supplied mask is true; callers
    intersect estimate validity, ground-truth coverage, and shadow masks
    before calling. Normal errors additionally skip non-finite or zero-norm
    estimates (e.g. depth-only outputs).
    """
    mask = np.asarray(mask, dtype=bool)
    a, b, z_aligned = align_depth(depth_est, depth_gt, mask, fit_scale=fit_scale)
    mean_rel, depth_map = rel_abs_depth_error(z_aligned, depth_gt, mask)

    ang_map = np.zeros(mask.shape, dtype=float)
    mean_ang = float("nan")
    if normal_est is not None and normal_gt is not None:
        norms = np.linalg.norm(np.asarray(normal_est, dtype=float), axis=-1)
        ok = mask & np.isfinite(norms) & (norms > 0)
        if ok.any():
            ang_map[ok] = angular_error(np.asarray(normal_est)[ok], np.asarray(normal_gt)[ok])
            mean_ang = float(ang_map[ok].mean())
    return EvalReport(
        mean_angular_error_deg=mean_ang,
        mean_rel_abs_depth_error=mean_rel,
        scale=a,
        shift=b,
        pixel_count=int(mask.sum()),
        angular_error_map=ang_map,
        depth_error_map=depth_map,
    )
