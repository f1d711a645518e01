"""Symmetric light rigs, cameras, and arrangement solvability.

Coordinate system: camera at the origin looking toward +z. All lights lie on
a plane perpendicular to the optical axis; a pair with radius ratio g and
angle t places its two lights at +-g*[sin t, cos t, 0] (in units of the first
pair's radius) around a shared offset point. Only the ratios and angles are
needed by the solver; the absolute radius and the offset are renderer-side
ground truth.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBasis

# Tolerance for |sin(angle difference)| below which two pairs count as parallel.
BASIS_TOL = 1e-9


class OffsetMode(enum.Enum):
    """Assumed structure of the unknown global light-plane offset."""

    NONE = "none"
    Z_ONLY = "z"
    XYZ = "xyz"

    @property
    def z_axis_only(self) -> bool:
        """True when the offset has no lateral (x, y) component."""
        return self is not OffsetMode.XYZ


class ArrangementKind(enum.Enum):
    FULL_GENERAL = "FullGeneral"
    FULL_GENERAL_Z_ONLY = "FullGeneralZOnly"
    RING_SCALED_DIST_ONLY = "RingScaledDistOnly"
    COLLINEAR_DEPTH_ONLY = "CollinearDepthOnly"
    INSUFFICIENT = "Insufficient"


@dataclass(frozen=True)
class ArrangementClass:
    """Solvability classification of a rig, with a human-readable reason."""

    kind: ArrangementKind
    diagnostic: str

    @property
    def solvable(self) -> bool:
        """True when per-pixel surface recovery (at least depth) is possible."""
        return self.kind in (
            ArrangementKind.FULL_GENERAL,
            ArrangementKind.FULL_GENERAL_Z_ONLY,
            ArrangementKind.COLLINEAR_DEPTH_ONLY,
        )


@dataclass(frozen=True)
class SymmetricPair:
    """One origin-symmetric light pair.

    Attributes:
        radius_ratio: Pair radius in units of the first pair's radius (> 0).
        angle: In-plane angle in radians, [0, 2*pi).
    """

    radius_ratio: float
    angle: float

    def __post_init__(self):
        if not self.radius_ratio > 0:
            raise ValueError(f"radius_ratio must be positive, got {self.radius_ratio}")
        object.__setattr__(self, "angle", float(self.angle) % (2.0 * math.pi))

    @property
    def direction(self) -> np.ndarray:
        """Unit-radius in-plane direction [sin angle, cos angle, 0] of the + light."""
        return np.array([math.sin(self.angle), math.cos(self.angle), 0.0])


@dataclass(frozen=True)
class SymmetricRig:
    """A full arrangement of symmetric light pairs.

    Attributes:
        pairs: At least two pairs; the first must have radius_ratio == 1.
        offset_mode: Assumed structure of the unknown offset (solver side).
        absolute_radius: First pair's radius in scene units, when known.
        offset_truth: Ground-truth offset in scene units; renderer only,
            never consulted by the solver.
    """

    pairs: tuple[SymmetricPair, ...]
    offset_mode: OffsetMode = OffsetMode.Z_ONLY
    absolute_radius: float | None = None
    offset_truth: tuple[float, float, float] | None = None

    def __post_init__(self):
        pairs = tuple(self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if len(pairs) < 2:
            raise ValueError(f"a rig needs at least 2 pairs, got {len(pairs)}")
        if abs(pairs[0].radius_ratio - 1.0) > 1e-12:
            raise ValueError(
                f"first pair must have radius_ratio 1, got {pairs[0].radius_ratio}"
            )
        if self.absolute_radius is not None and not self.absolute_radius > 0:
            raise ValueError(f"absolute_radius must be positive, got {self.absolute_radius}")
        seen = set()
        for p in pairs:
            key = (round(p.radius_ratio, 12), round(p.angle % math.pi, 9))
            if key in seen:
                raise ValueError(
                    f"duplicate pair (ratio {p.radius_ratio}, angle {p.angle}):"
                    " the two pairs share the same four light positions"
                )
            seen.add(key)
        if self.offset_truth is not None:
            object.__setattr__(self, "offset_truth", tuple(float(v) for v in self.offset_truth))

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_lights(self) -> int:
        return 2 * len(self.pairs)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([p.radius_ratio for p in self.pairs])

    @property
    def angles(self) -> np.ndarray:
        return np.array([p.angle for p in self.pairs])

    @property
    def is_collinear(self) -> bool:
        """True when every pair lies on one line through the offset point."""
        angles = self.angles
        d = (angles - angles[0]) % math.pi
        return bool(np.all((d < BASIS_TOL) | (math.pi - d < BASIS_TOL)))

    @property
    def is_ring(self) -> bool:
        """True when all pairs share a single radius."""
        ratios = self.ratios
        return bool(np.all(np.abs(ratios - ratios[0]) < 1e-12))

    @property
    def is_metric(self) -> bool:
        """True when absolute light positions are available (renderer/oracle)."""
        return self.absolute_radius is not None and self.offset_truth is not None

    def relative_light_positions(self) -> np.ndarray:
        """(2*n_pairs, 3) light positions (s - s_o)/r, ordered (0+, 0-, 1+, ...)."""
        out = np.zeros((self.n_lights, 3))
        for i, p in enumerate(self.pairs):
            v = p.radius_ratio * p.direction
            out[2 * i] = v
            out[2 * i + 1] = -v
        return out

    def metric_light_positions(self) -> np.ndarray:
        """(2*n_pairs, 3) absolute light positions in scene units."""
        from .errors import RigNotMetric

        if not self.is_metric:
            raise RigNotMetric(
                "rig not metric: absolute_radius and offset_truth are required"
            )
        return self.absolute_radius * self.relative_light_positions() + np.asarray(
            self.offset_truth
        )


def rig_from_pairs(
    pairs_deg: list[tuple[float, float]],
    offset_mode: OffsetMode | str = OffsetMode.Z_ONLY,
    absolute_radius: float | None = None,
    offset_truth: tuple[float, float, float] | None = None,
) -> SymmetricRig:
    """Build a rig from (radius_ratio, angle_in_degrees) tuples."""
    if isinstance(offset_mode, str):
        offset_mode = OffsetMode(offset_mode)
    pairs = tuple(SymmetricPair(r, math.radians(a)) for r, a in pairs_deg)
    return SymmetricRig(pairs, offset_mode, absolute_radius, offset_truth)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera mapping pixels to normalized camera coordinates.

    A pixel (u, v) maps to the viewing direction
    [(u - cx)/fx, (v - cy)/fy, 1].
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width):
            raise ValueError(f"cx must be in [0, width), got {self.cx}")
        if not (0 <= self.cy < self.height):
            raise ValueError(f"cy must be in [0, height), got {self.cy}")

    def normalized_coords(self, u, v):
        """Normalized coordinates (u', v') for pixel coordinates (u, v)."""
        return (np.asarray(u) - self.cx) / self.fx, (np.asarray(v) - self.cy) / self.fy

    def pixel_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """(H, W) arrays of normalized coordinates for the full image."""
        u = np.arange(self.width)
        v = np.arange(self.height)
        un, vn = self.normalized_coords(u, v)
        return np.broadcast_to(un[None, :], (self.height, self.width)).copy(), np.broadcast_to(
            vn[:, None], (self.height, self.width)
        ).copy()


def light_position(
    pair: SymmetricPair, sign: int, radius_unit: float, offset
) -> np.ndarray:
    """Absolute position of one light of a pair.

    Args:
        pair: The symmetric pair.
        sign: +1 for the + light, -1 for its mirror.
        radius_unit: First pair's radius in scene units (> 0).
        offset: Shared 3-vector offset of the light plane.

    Returns:
        sign * (radius_ratio * radius_unit) * [sin angle, cos angle, 0] + offset.
    """
    if radius_unit <= 0:
        raise ValueError(f"radius_unit must be positive, got {radius_unit}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    return sign * pair.radius_ratio * radius_unit * pair.direction + np.asarray(offset, dtype=float)


def basis_coefficients(
    basis1: SymmetricPair,
    basis2: SymmetricPair,
    target: SymmetricPair,
    tol: float = BASIS_TOL,
) -> tuple[float, float]:
    """Decompose a pair's relative light position over two basis pairs.

    Finds (s, t) with
    target.ratio*[sin psi, cos psi] = s*b1.ratio*[sin t1, cos t1]
                                    + t*b2.ratio*[sin t2, cos t2].

    Raises:
        DegenerateBasis: When |sin(t1 - t2)| < tol (parallel bases).
    """
    det = math.sin(basis1.angle - basis2.angle)
    if abs(det) < tol:
        raise DegenerateBasis(
            f"basis pairs are parallel: |sin({basis1.angle} - {basis2.angle})| < {tol}"
        )
    s = target.radius_ratio / basis1.radius_ratio * math.sin(target.angle - basis2.angle) / det
    t = target.radius_ratio / basis2.radius_ratio * math.sin(basis1.angle - target.angle) / det
    return s, t


def select_basis_pairs(rig: SymmetricRig, tol: float = BASIS_TOL) -> tuple[int, int]:
    """Indices of the two pairs with the largest decomposition determinant.

    The determinant of the 2x2 decomposition system is
    ratio_i * ratio_j * sin(angle_i - angle_j); maximizing its magnitude keeps
    the (s, t) coefficients small for every target.

    Raises:
        DegenerateBasis: When all pairs are mutually parallel.
    """
    ratios = rig.ratios
    angles = rig.angles
    best = None
    best_det = tol
    for i in range(rig.n_pairs):
        for j in range(i + 1, rig.n_pairs):
            det = ratios[i] * ratios[j] * abs(math.sin(angles[i] - angles[j]))
            if det > best_det:
                best = (i, j)
                best_det = det
    if best is None:
        raise DegenerateBasis("all pairs are parallel; no basis decomposition exists")
    return best


def classify_arrangement(rig: SymmetricRig) -> ArrangementClass:
    """Classify a rig by what the constraint system can recover.

    The classification is a pure function of the pair list and the offset
    mode. Offset mode "none" behaves like a z-axis offset whose value happens
    to be zero, so it reuses the z-only rules.
    """
    n = rig.n_pairs
    collinear = rig.is_collinear
    ring = rig.is_ring
    z_like = rig.offset_mode.z_axis_only

    if collinear:
        if not z_like:
            return ArrangementClass(
                ArrangementKind.INSUFFICIENT,
                "collinear lights need a z-axis-only offset; with a lateral offset the"
                " pixel-ray ratio constraint is unavailable",
            )
        return ArrangementClass(
            ArrangementKind.COLLINEAR_DEPTH_ONLY,
            f"all {n} pairs lie on one line: depth-only recovery with"
            " >= 4 lights and a z-axis offset",
        )

    if ring:
        enough = n >= 2 if z_like else n >= 3
        if not enough:
            return ArrangementClass(
                ArrangementKind.INSUFFICIENT,
                f"ring light with {n} pairs and an xyz offset: scaled-distance"
                " estimation needs >= 3 pairs",
            )
        return ArrangementClass(
            ArrangementKind.RING_SCALED_DIST_ONLY,
            "ring light (single radius): scaled distances are estimable, but"
            " At least two pairs with different radii must exist for the"
            " surface position estimation",
        )

    if n < 3:
        return ArrangementClass(
            ArrangementKind.INSUFFICIENT,
            f"{n} non-collinear pairs: scaled-distance estimation needs >= 3 pairs"
            " for every offset mode",
        )

    if z_like:
        return ArrangementClass(
            ArrangementKind.FULL_GENERAL_Z_ONLY,
            ">= 2 distinct radii, >= 3 pairs, non-collinear, z-axis offset:"
            " full position and normal recovery",
        )
    return ArrangementClass(
        ArrangementKind.FULL_GENERAL,
        ">= 2 distinct radii, >= 3 pairs, non-collinear, xyz offset:"
        " full recovery up to the offset/scale ambiguity",
    )
