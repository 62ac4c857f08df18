"""Compute a per-pixel perspective angle field and render it as a PPM.

A pinhole camera looking down a road sees every depth-parallel line vanish
at the principal point. This script builds the angle field for a KITTI-like
camera, prints a few sample angles, and writes a hue-coded visualization
you can open with any image viewer.
"""

import math
import os

import numpy as np

from paconv import (CameraIntrinsics, GroundPlane, angle_field,
                    write_angle_ppm)

OUT_DIR = os.path.join(os.path.dirname(__file__), "out")

intrinsics = CameraIntrinsics(fx=721.5377, fy=721.5377, cx=609.5593, cy=172.854)
ground = GroundPlane(y0=1.65)  # camera mounted 1.65 m above the road

width, height = 1280, 384
field = angle_field(width, height, intrinsics, ground)

print(f"angle field: {width}x{height}, "
      f"{int(field.valid.sum())} valid pixels, "
      f"{int((~field.valid).sum())} in the horizon band")

# Directly below the principal point the scene recedes straight up the
# image, so the angle is -90 degrees; off to the sides it tilts toward
# the vanishing point.
for u, v in ((int(intrinsics.cx), 350), (100, 350), (1200, 350), (100, 200)):
    phi = field.phi[v, u]
    print(f"  pixel (u={u:4d}, v={v}): phi = {math.degrees(phi):7.2f} deg")

expected = math.degrees(math.atan2(intrinsics.cy - 350, 0.0))
print(f"  (below the principal point the exact value is {expected:.2f} deg)")

os.makedirs(OUT_DIR, exist_ok=True)
ppm_path = os.path.join(OUT_DIR, "angle_field.ppm")
write_angle_ppm(field, ppm_path)
print(f"wrote {ppm_path} ({os.path.getsize(ppm_path)} bytes)")

# Every valid angle points into the lower half-circle: the ground always
# recedes upward in the image.
assert (np.sin(field.phi[field.valid]) < 0).all()
print("checked: all valid angles point upward in the image (sin phi < 0)")
