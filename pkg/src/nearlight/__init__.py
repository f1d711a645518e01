"""Near-light photometric stereo from symmetric point-light pairs.

A per-pixel linear method: pairwise intensity constraints plus fall-off
relaxation pin each pixel's scaled light distances as a null-space vector,
from which surface position, normal, and albedo follow in closed form.
"""

from . import errors
from .constraints import (
    ConstraintSystem,
    PixelStack,
    build_A,
    build_A_prime,
    build_system,
    make_pixel_stack,
    numeric_rank,
)
from .geometry import (
    ArrangementClass,
    ArrangementKind,
    CameraIntrinsics,
    OffsetMode,
    SymmetricPair,
    SymmetricRig,
    basis_coefficients,
    classify_arrangement,
    light_position,
    rig_from_pairs,
)
from .io import load_camera, load_manifest, load_rig, read_pfm, write_pfm
from .metrics import EvalReport, align_depth, angular_error, evaluate, rel_abs_depth_error
from .oracle import DepthGrid, OracleResult, brute_force_image, brute_force_pixel, default_grid
from .render import RenderedStack, Scene, add_sensor_noise, quantize, ray_surface_point, render
from .solver import (
    ScaledDistances,
    Surfel,
    SurfelMap,
    SurfelStatus,
    recover_normal,
    recover_position,
    recover_rho_inv_r2,
    solve_collinear,
    solve_image,
    solve_pixel,
    solve_scaled_distances,
)

__version__ = "0.1.0"

__all__ = [
    "ArrangementClass",
    "ArrangementKind",
    "CameraIntrinsics",
    "ConstraintSystem",
    "DepthGrid",
    "EvalReport",
    "OffsetMode",
    "OracleResult",
    "PixelStack",
    "RenderedStack",
    "ScaledDistances",
    "Scene",
    "Surfel",
    "SurfelMap",
    "SurfelStatus",
    "SymmetricPair",
    "SymmetricRig",
    "add_sensor_noise",
    "align_depth",
    "angular_error",
    "basis_coefficients",
    "brute_force_image",
    "brute_force_pixel",
    "build_A",
    "build_A_prime",
    "build_system",
    "classify_arrangement",
    "default_grid",
    "errors",
    "evaluate",
    "light_position",
    "load_camera",
    "load_manifest",
    "load_rig",
    "make_pixel_stack",
    "numeric_rank",
    "quantize",
    "ray_surface_point",
    "read_pfm",
    "recover_normal",
    "recover_position",
    "recover_rho_inv_r2",
    "rel_abs_depth_error",
    "render",
    "rig_from_pairs",
    "solve_collinear",
    "solve_image",
    "solve_pixel",
    "solve_scaled_distances",
    "write_pfm",
]
