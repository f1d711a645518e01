"""Per-pixel homogeneous constraint systems on the scaled-distance vector.

Two row families act on e (one entry per light, ordered pair 0 +, pair 0 -,
pair 1 +, ...):

* A rows carry measured intensities as coefficients. Differences of a
  symmetric pair isolate the pair's relative light direction, so any third
  pair's difference decomposes over two basis pairs (diff rows); sums of a
  pair are pair-independent (sum rows). These rows hold exactly for the
  physical cubic-fall-off scaled distance.
* A' rows come from relaxing the fall-off to first power, which makes e
  quadratic in the surface point. Pair sums then depend only on the pair
  radius (1A across distinct radii, 1B across equal radii), and pair
  differences inherit the basis decomposition (2A) or, when the light-plane
  offset is z-only, the pixel-ray direction (2B). These rows hold exactly
  for the relaxed scaled distance and are independent of the intensities.

When every pair lies on one line, the basis decomposition degenerates to a
single basis pair (diff rows with one coefficient) and the 2B rows share a
common pixel factor that cancels; the reduced system still pins e for
n_pairs >= 2.

Rows are normalized to unit Euclidean norm before stacking so that no
constraint family dominates the least-squares residual by sheer magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import (
    CameraIntrinsics,
    SymmetricRig,
    basis_coefficients,
    select_basis_pairs,
)

_EQUAL_RATIO_TOL = 1e-12
# u'^2 + v'^2 below this counts as the principal point.
PRINCIPAL_POINT_TOL = 1e-12


@dataclass
class PixelStack:
    """Intensity measurements at one pixel, ordered like RenderedStack images."""

    intensities: np.ndarray  # (2 * n_pairs,)
    pixel_coord: tuple[float, float]
    normalized_coord: tuple[float, float]
    valid: bool = True

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=float)


def make_pixel_stack(
    images: np.ndarray, camera: CameraIntrinsics, u: int, v: int, valid: bool = True
) -> PixelStack:
    un, vn = camera.normalized_coords(u, v)
    return PixelStack(images[:, v, u], (u, v), (float(un), float(vn)), valid)


@dataclass
class ConstraintSystem:
    """Assembled per-pixel system; rows are unit-normalized.

    tags label every stacked row with its family, in [A; A_prime] order.
    """

    A: np.ndarray
    A_prime: np.ndarray
    tags: tuple[str, ...]

    def stacked(self) -> np.ndarray:
        return np.vstack([self.A, self.A_prime])


@dataclass(frozen=True)
class ConstraintTemplate:
    """Rig-dependent row recipes, shared read-only across all pixels."""

    n_pairs: int
    collinear: bool
    z_axis_offset: bool
    basis: tuple[int, int] | None
    # (target, basis0, basis1, s, t); collinear rigs use basis0 with t = 0.
    diff_rows: tuple[tuple[int, int, int, float, float], ...]
    sum_rows: tuple[tuple[int, int], ...]
    static_1a: np.ndarray  # (R, 2n)
    static_1b: np.ndarray
    static_2a: np.ndarray
    combos_2b: tuple[tuple[int, int], ...]
    dir_sin: np.ndarray  # per pair: ratio * sin(angle)
    dir_cos: np.ndarray  # per pair: ratio * cos(angle)
    static_2b: np.ndarray  # collinear only; empty otherwise

    @property
    def n_rows_a(self) -> int:
        return len(self.diff_rows) + len(self.sum_rows)

    @property
    def n_rows_2b(self) -> int:
        # cross rows plus the principal-point limit rows (general z-only case)
        if self.combos_2b:
            return len(self.combos_2b) + self.n_pairs
        return len(self.static_2b)

    @property
    def n_rows_a_prime(self) -> int:
        static = len(self.static_1a) + len(self.static_1b) + len(self.static_2a)
        return static + self.n_rows_2b

    @property
    def tags(self) -> tuple[str, ...]:
        return (
            ("diff",) * len(self.diff_rows)
            + ("sum",) * len(self.sum_rows)
            + ("1A",) * len(self.static_1a)
            + ("1B",) * len(self.static_1b)
            + ("2A",) * len(self.static_2a)
            + ("2B",) * self.n_rows_2b
        )


def _rows_1a(ratios: np.ndarray) -> np.ndarray:
    """One sum-family row per pair triple that admits a reference pair.

    With reference i and companions j, k at radius ratios a = r_j/r_i,
    b = r_k/r_i (both != 1), equating the two expressions for the
    albedo-scaled squared radius gives coefficients 1/(2(b^2-1)) on the k
    sums, -1/(2(a^2-1)) on the j sums, and their difference on the i sums.
    """
    n = len(ratios)
    rows = []
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                for ref, j, k in ((a, b, c), (b, a, c), (c, a, b)):
                    if (
                        abs(ratios[j] - ratios[ref]) < _EQUAL_RATIO_TOL
                        or abs(ratios[k] - ratios[ref]) < _EQUAL_RATIO_TOL
                    ):
                        continue
                    alpha = ratios[j] / ratios[ref]
                    beta = ratios[k] / ratios[ref]
                    c_alpha = 1.0 / (2.0 * (alpha**2 - 1.0))
                    c_beta = 1.0 / (2.0 * (beta**2 - 1.0))
                    row = np.zeros(2 * n)
                    row[2 * k] = row[2 * k + 1] = c_beta
                    row[2 * j] = row[2 * j + 1] = -c_alpha
                    row[2 * ref] = row[2 * ref + 1] = c_alpha - c_beta
                    rows.append(row)
                    break  # one row per triple; other references span the same line
    return np.array(rows) if rows else np.zeros((0, 2 * n))


def _rows_1b(ratios: np.ndarray) -> np.ndarray:
    """Sum equality for every combination of two equal-radius pairs."""
    n = len(ratios)
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            if abs(ratios[i] - ratios[j]) < _EQUAL_RATIO_TOL:
                row = np.zeros(2 * n)
                row[2 * i] = row[2 * i + 1] = 1.0
                row[2 * j] = row[2 * j + 1] = -1.0
                rows.append(row)
    return np.array(rows) if rows else np.zeros((0, 2 * n))


@lru_cache(maxsize=64)
def build_template(rig: SymmetricRig) -> ConstraintTemplate:
    """Precompute all row recipes for a rig and its offset mode."""
    n = rig.n_pairs
    ratios = rig.ratios
    angles = rig.angles
    z_axis = rig.offset_mode.z_axis_only
    collinear = rig.is_collinear

    diff_rows: list[tuple[int, int, int, float, float]] = []
    basis = None
    if collinear:
        # Every relative light position is a multiple of pair 0's direction;
        # the sign flips for pairs parameterized half a turn away.
        for j in range(1, n):
            eps = 1.0 if math.cos(angles[j] - angles[0]) > 0 else -1.0
            s = eps * ratios[j] / ratios[0]
            diff_rows.append((j, 0, 0, s, 0.0))
    else:
        basis = select_basis_pairs(rig)
        b0, b1 = basis
        for tgt in range(n):
            if tgt in basis:
                continue
            s, t = basis_coefficients(rig.pairs[b0], rig.pairs[b1], rig.pairs[tgt])
            diff_rows.append((tgt, b0, b1, s, t))

    sum_rows = tuple((0, j) for j in range(1, n))

    static_1a = _rows_1a(ratios)
    static_1b = _rows_1b(ratios)

    static_2a = np.zeros((0, 2 * n))
    combos_2b: tuple = ()
    static_2b = np.zeros((0, 2 * n))
    if not z_axis:
        rows = []
        for tgt, b0, b1, s, t in diff_rows:
            row = np.zeros(2 * n)
            row[2 * tgt], row[2 * tgt + 1] = 1.0, -1.0
            row[2 * b0] -= s
            row[2 * b0 + 1] += s
            row[2 * b1] -= t
            row[2 * b1 + 1] += t
            rows.append(row)
        if rows:
            static_2a = np.array(rows)
    elif collinear:
        # The pixel factor u'*sin + v'*cos is shared by all pairs; cancel it.
        h = np.array([ratios[i] * (1.0 if math.cos(angles[i] - angles[0]) > 0 else -1.0) for i in range(n)])
        rows = []
        for i in range(n):
            for j in range(i + 1, n):
                row = np.zeros(2 * n)
                row[2 * j], row[2 * j + 1] = h[i], -h[i]
                row[2 * i], row[2 * i + 1] = -h[j], h[j]
                rows.append(row)
        static_2b = np.array(rows)
    else:
        combos_2b = tuple((i, j) for i in range(n) for j in range(i + 1, n))
        # At the exact principal point every cross row vanishes while the
        # model forces each pair difference to zero; per-pair rows carry that
        # limit and stay zero elsewhere.

    return ConstraintTemplate(
        n_pairs=n,
        collinear=collinear,
        z_axis_offset=z_axis,
        basis=basis,
        diff_rows=tuple(diff_rows),
        sum_rows=sum_rows,
        static_1a=static_1a,
        static_1b=static_1b,
        static_2a=static_2a,
        combos_2b=combos_2b,
        dir_sin=ratios * np.sin(angles),
        dir_cos=ratios * np.cos(angles),
        static_2b=static_2b,
    )


def _normalize_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=-1, keepdims=True)
    return np.where(norms > 0, rows / np.where(norms > 0, norms, 1.0), 0.0)


def assemble_a(template: ConstraintTemplate, m: np.ndarray) -> np.ndarray:
    """Intensity-coefficient rows for a batch of pixels.

    Args:
        m: (2 * n_pairs, N) intensities.

    Returns:
        (N, n_rows_a, 2 * n_pairs) unit-normalized rows.
    """
    n2, N = m.shape
    if n2 != 2 * template.n_pairs:
        raise ValueError(
            f"stack has {n2} intensities but the rig has {2 * template.n_pairs} lights"
        )
    rows = np.zeros((N, template.n_rows_a, n2))
    r = 0
    for tgt, b0, b1, s, t in template.diff_rows:
        rows[:, r, 2 * b0] += s * m[2 * b0]
        rows[:, r, 2 * b0 + 1] += -s * m[2 * b0 + 1]
        rows[:, r, 2 * b1] += t * m[2 * b1]
        rows[:, r, 2 * b1 + 1] += -t * m[2 * b1 + 1]
        rows[:, r, 2 * tgt] += -m[2 * tgt]
        rows[:, r, 2 * tgt + 1] += m[2 * tgt + 1]
        r += 1
    for i, j in template.sum_rows:
        rows[:, r, 2 * i] = m[2 * i]
        rows[:, r, 2 * i + 1] = m[2 * i + 1]
        rows[:, r, 2 * j] = -m[2 * j]
        rows[:, r, 2 * j + 1] = -m[2 * j + 1]
        r += 1
    return _normalize_rows(rows)


def assemble_a_prime(
    template: ConstraintTemplate, u_norm: np.ndarray, v_norm: np.ndarray
) -> np.ndarray:
    """Relaxation rows for a batch of pixels at normalized coordinates.

    Returns:
        (N, n_rows_a_prime, 2 * n_pairs) unit-normalized rows.
    """
    u_norm = np.atleast_1d(np.asarray(u_norm, dtype=float))
    v_norm = np.atleast_1d(np.asarray(v_norm, dtype=float))
    N = u_norm.shape[0]
    n2 = 2 * template.n_pairs
    static = np.concatenate(
        [template.static_1a, template.static_1b, template.static_2a], axis=0
    )
    parts = [np.broadcast_to(static, (N, len(static), n2))]
    if template.combos_2b:
        g = (
            u_norm[:, None] * template.dir_sin[None, :]
            + v_norm[:, None] * template.dir_cos[None, :]
        )  # (N, n_pairs)
        rows = np.zeros((N, len(template.combos_2b), n2))
        for r, (i, j) in enumerate(template.combos_2b):
            rows[:, r, 2 * j] = g[:, i]
            rows[:, r, 2 * j + 1] = -g[:, i]
            rows[:, r, 2 * i] = -g[:, j]
            rows[:, r, 2 * i + 1] = g[:, j]
        parts.append(rows)
        # Principal-point limit: the cross rows all vanish there, but the
        # z-only model pins every pair difference to zero.
        at_pp = (u_norm**2 + v_norm**2 < PRINCIPAL_POINT_TOL).astype(float)
        n = template.n_pairs
        pp_rows = np.zeros((N, n, n2))
        for i in range(n):
            pp_rows[:, i, 2 * i] = at_pp
            pp_rows[:, i, 2 * i + 1] = -at_pp
        parts.append(pp_rows)
    if len(template.static_2b):
        parts.append(np.broadcast_to(template.static_2b, (N, len(template.static_2b), n2)))
    return _normalize_rows(np.concatenate(parts, axis=1))


def assemble_stacked(
    template: ConstraintTemplate, m: np.ndarray, u_norm, v_norm
) -> np.ndarray:
    """Full (N, n_rows, 2 * n_pairs) stacked [A; A'] batch."""
    return np.concatenate(
        [assemble_a(template, m), assemble_a_prime(template, u_norm, v_norm)], axis=1
    )


def build_A(rig: SymmetricRig, stack: PixelStack) -> np.ndarray:
    """Intensity-constraint matrix for one pixel (unit-normalized rows)."""
    if not stack.valid:
        raise ValueError("cannot build constraints for an invalid pixel")
    template = build_template(rig)
    return assemble_a(template, stack.intensities[:, None])[0]


def build_A_prime(rig: SymmetricRig, stack: PixelStack) -> np.ndarray:
    """Relaxation-constraint matrix for one pixel (unit-normalized rows)."""
    if not stack.valid:
        raise ValueError("cannot build constraints for an invalid pixel")
    template = build_template(rig)
    un, vn = stack.normalized_coord
    return assemble_a_prime(template, np.array([un]), np.array([vn]))[0]


def build_system(rig: SymmetricRig, stack: PixelStack) -> ConstraintSystem:
    """Both constraint matrices plus row provenance tags for one pixel."""
    template = build_template(rig)
    return ConstraintSystem(
        A=build_A(rig, stack), A_prime=build_A_prime(rig, stack), tags=template.tags
    )


def numeric_rank(matrix: np.ndarray, rel_tol: float = 1e-8) -> int:
    """Number of singular values above rel_tol times the largest."""
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))
