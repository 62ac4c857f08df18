"""Show how the kernel tap grid skews with the perspective angle.

A standard dilated 3x3 kernel samples an axis-aligned grid. The
perspective kernel keeps its horizontal axis but tilts the vertical one
onto the local depth direction, so the sampled hexagon leans toward the
vanishing point.
"""

import math

import numpy as np

from paconv import (AngleField, CameraIntrinsics, GroundPlane, KernelSpec,
                    angle_field, build_offset_field, kernel_offsets)


def show(phi_deg, offsets):
    print(f"phi = {phi_deg:7.2f} deg")
    for row in range(3):
        taps = ", ".join(f"({offsets[row * 3 + c, 0]:+.2f}, {offsets[row * 3 + c, 1]:+.2f})"
                         for c in range(3))
        print(f"    {taps}")


spec = KernelSpec(rows=3, cols=3, dilation=2)

# Straight up-down (phi = -90 deg): the plain dilated grid.
show(-90.0, kernel_offsets(-math.pi / 2, spec))

# Tilted 45 degrees: the top and bottom rows shear sideways.
show(-45.0, kernel_offsets(-math.pi / 4, spec))

# Nearly horizontal: the kernel collapses toward a line.
show(-170.0, kernel_offsets(math.radians(-170.0), spec))

# On a real camera the skew varies per pixel. Offsets at the image corners
# lean in opposite directions because the vanishing point sits between them.
k = CameraIntrinsics(721.5377, 721.5377, 609.5593, 172.854)
field = angle_field(1280, 384, k, GroundPlane(1.65))
offs = build_offset_field(field, spec)
print("\nper-pixel skew on a 1280x384 camera grid:")
for u in (100, 640, 1180):
    du, dv = offs.offsets[380, u, 0]  # top-left tap of the kernel at row 380
    print(f"    pixel (u={u:4d}, v=380): top-left tap offset ({du:+.2f}, {dv:+.2f})")

# The center tap never moves, whatever the angle: the kernel pivots there.
assert (offs.offsets[:, :, 4, :] == 0.0).all()
print("checked: the center tap stays at (0, 0) at every pixel")

# A uniform upright field reproduces standard dilation exactly.
up = build_offset_field(AngleField.uniform(8, 8, math.pi / 2), spec)
ii, jj = np.meshgrid(range(-1, 2), range(-1, 2), indexing="ij")
grid = np.stack([2 * jj.ravel(), 2 * ii.ravel()], axis=-1)
assert np.allclose(up.offsets[4, 4], grid, atol=1e-12)
print("checked: phi = +90 deg degenerates to the standard dilated grid")
