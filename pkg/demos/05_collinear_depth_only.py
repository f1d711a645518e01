"""The four-lights-on-a-line special case: depth without normals.

With only two pairs sharing one angle, all four lights sit on a single line.
The basis decomposition collapses, yet a z-axis-only offset leaves enough
structure: pair differences plus the pixel-ray direction still pin the
scaled distances, and depth follows. Normals stay out of reach because every
light direction is coplanar with the line, so the per-pixel shading system
is rank deficient in one direction.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nearlight import (
    CameraIntrinsics,
    Scene,
    align_depth,
    classify_arrangement,
    render,
    rel_abs_depth_error,
    rig_from_pairs,
    solve_image,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)


def main():
    rig = rig_from_pairs(
        [(1, 45), (2, 45)],
        offset_mode="z",
        absolute_radius=1.0,
        offset_truth=(0.0, 0.0, 0.5),
    )
    cls = classify_arrangement(rig)
    print(f"arrangement: {cls.kind.value} -- {cls.diagnostic}")

    camera = CameraIntrinsics(fx=150, fy=150, cx=47.5, cy=47.5, width=96, height=96)
    bump = np.full((96, 96), 6.0)
    yy, xx = np.mgrid[0:96, 0:96]
    bump -= 0.6 * np.exp(-((xx - 48) ** 2 + (yy - 48) ** 2) / (2 * 18.0**2))
    scene = Scene(kind="heightfield", depth_map=bump, albedo=0.9)

    stack = render(scene, rig, camera, falloff="relaxed")
    result = solve_image(stack.images, rig, camera, mask=stack.mask)
    ok = result.ok
    print(f"recovered {ok.sum()} of {stack.mask.sum()} pixels (depth only)")
    print(f"normals emitted: {np.isfinite(result.normal[ok]).any()}")

    a, b, aligned = align_depth(result.depth(1.0), stack.gt_depth, ok)
    rel, err_map = rel_abs_depth_error(aligned, stack.gt_depth, ok)
    print(f"aligned scale {a:.6f}, shift {b:+.6f}")
    print(f"mean relative depth error: {rel:.2e}")

    fig, axes = plt.subplots(1, 3, figsize=(11, 3.6))
    axes[0].imshow(stack.gt_depth, cmap="viridis")
    axes[0].set_title("true depth (bump)")
    axes[1].imshow(np.where(ok, aligned, np.nan), cmap="viridis")
    axes[1].set_title("recovered depth (aligned)")
    im = axes[2].imshow(np.where(ok, err_map, np.nan), cmap="magma")
    axes[2].set_title("relative error")
    fig.colorbar(im, ax=axes[2], shrink=0.8)
    for ax in axes:
        ax.axis("off")
    fig.tight_layout()
    path = os.path.join(OUT, "collinear_depth.png")
    fig.savefig(path, dpi=150)
    print(f"figure: {path}")


if __name__ == "__main__":
    main()
