"""Shared synthetic-data helpers for the test suite.

The analytic relaxed pixel generator is the independent oracle used across
constraint and solver tests: it evaluates the relaxed shading model directly
from a chosen surface point, normal, and albedo (normalized rig units, first
radius = 1, zero offset unless stated), with no constraint assembly involved.
"""

import numpy as np

from nearlight.geometry import rig_from_pairs


def double_ring_rig(mode="z", absolute_radius=None, offset_truth=None):
    """Four pairs, radii {1, 1, 2, 2}, angles {45, 135, 45, 135} degrees."""
    return rig_from_pairs(
        [(1, 45), (1, 135), (2, 45), (2, 135)],
        offset_mode=mode,
        absolute_radius=absolute_radius,
        offset_truth=offset_truth,
    )


def ring_plus_line_rig(mode="xyz", absolute_radius=None, offset_truth=None):
    """Three pairs: inner ring of two at {45, 135} plus one outer pair."""
    return rig_from_pairs(
        [(1, 45), (1, 135), (2, 45)],
        offset_mode=mode,
        absolute_radius=absolute_radius,
        offset_truth=offset_truth,
    )


def relaxed_pixel(rig, rng=None, x=None, normal=None, albedo=None, uv=None):
    """Analytic relaxed-model measurements for one surface point.

    Works in normalized rig units (first radius 1, zero offset). Returns
    (m, e, (u, v), x, n, rho) where e is the exact relaxed scaled distance
    rho^-1 * d^2 per light and m the relaxed intensity.
    """
    if rng is not None:
        uv = (rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25)) if uv is None else uv
        z = rng.uniform(4.0, 8.0)
        x = z * np.array([uv[0], uv[1], 1.0]) if x is None else np.asarray(x, float)
        if normal is None:
            normal = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), -1.0])
        albedo = rng.uniform(0.5, 1.5) if albedo is None else albedo
    x = np.asarray(x, dtype=float)
    if uv is None:
        uv = (x[0] / x[2], x[1] / x[2])
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    lights = rig.relative_light_positions()
    to_light = lights - x
    d2 = np.sum(to_light**2, axis=1)
    shading = to_light @ n
    assert np.all(shading > 0), "test point must be lit by every light"
    m = albedo * shading / d2
    e = d2 / albedo
    return m, e, uv, x, n, albedo
