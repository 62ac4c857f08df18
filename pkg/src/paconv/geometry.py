"""Pinhole-camera geometry and per-pixel perspective angles.

The perspective angle of a pixel is the image-plane direction in which that
pixel would drift if the depth of its 3D point increased, with the point
placed on a fixed-height ground plane. All depth-parallel lines vanish at
the principal point, so for ground pixels below the horizon the angle simply
points from the pixel toward (cx, cy). Everything here is computed in f64;
the inverse-square terms lose too much precision in f32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DepthNotPositive, HorizonSingularity, InvalidDimensions, ShapeMismatch

# Angle assigned inside the horizon band. An upright axis makes the skewed
# kernel degenerate to the plain dilated grid, so the operator falls back to
# standard dilated convolution exactly where the geometry blows up.
FALLBACK_ANGLE = math.pi / 2

ABOVE_HORIZON_MODES = ("verbatim", "fallback")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics, all in pixel units."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"intrinsic {name} must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    def scaled(self, stride: float) -> "CameraIntrinsics":
        """Intrinsics for a feature map downsampled by `stride`."""
        if stride <= 0:
            raise ValueError("stride must be positive")
        return CameraIntrinsics(self.fx / stride, self.fy / stride,
                                self.cx / stride, self.cy / stride)


@dataclass(frozen=True)
class CameraPoint:
    """Point in camera coordinates: x right, y down, z forward, in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.y, self.z))):
            raise ValueError("camera point must be finite")


@dataclass(frozen=True)
class PixelCoord:
    """Image coordinates (u = column, v = row). Subpixel and out-of-frame values are legal."""

    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError("pixel coordinate must be finite")


@dataclass(frozen=True)
class GroundPlane:
    """Horizontal plane at camera-frame height y0 (y points down: y0 > 0 is below the camera)."""

    y0: float

    def __post_init__(self):
        if not math.isfinite(self.y0) or self.y0 == 0:
            raise ValueError("ground height must be finite and nonzero")


@dataclass(frozen=True)
class DepthGradient:
    """Pixel displacement per unit depth increase, in pixels per meter."""

    du_dz: float
    dv_dz: float


class AngleField:
    """Perspective angle at every pixel of a grid, plus a validity mask.

    Pixels whose row falls inside the horizon band carry ``FALLBACK_ANGLE``
    and ``valid=False``; everything else holds the angle in (-pi, pi].
    """

    __slots__ = ("width", "height", "phi", "valid")

    def __init__(self, width: int, height: int, phi: np.ndarray, valid: np.ndarray):
        if width < 1 or height < 1:
            raise InvalidDimensions(f"angle field {width}x{height}")
        phi = np.asarray(phi, dtype=np.float64)
        valid = np.asarray(valid, dtype=bool)
        if phi.shape != (height, width) or valid.shape != (height, width):
            raise ShapeMismatch(
                f"phi {phi.shape} / valid {valid.shape} do not match {height}x{width}")
        self.width = width
        self.height = height
        self.phi = phi
        self.valid = valid

    @classmethod
    def uniform(cls, width: int, height: int, phi: float) -> "AngleField":
        """Constant-angle field; handy for oracle checks against plain dilation."""
        return cls(width, height,
                   np.full((height, width), float(phi)),
                   np.ones((height, width), dtype=bool))


def project(point: CameraPoint, k: CameraIntrinsics) -> PixelCoord:
    """Project a camera-space point to the image plane.

    Raises DepthNotPositive when the point is at or behind the image plane.
    """
    if point.z <= 0:
        raise DepthNotPositive(f"cannot project point with z={point.z}")
    return PixelCoord(k.fx * point.x / point.z + k.cx,
                      k.fy * point.y / point.z + k.cy)


def backproject_ground(pixel: PixelCoord, k: CameraIntrinsics, g: GroundPlane) -> CameraPoint:
    """Intersect a pixel's viewing ray with the ground plane.

    Returns the algebraic intersection even when it lies behind the camera
    (z < 0 for pixels above the horizon with y0 > 0); only the exact horizon
    row is rejected, since the division degenerates there.
    """
    dv = pixel.v - k.cy
    if dv == 0:
        raise HorizonSingularity(f"v={pixel.v} sits exactly on the horizon row")
    x = (pixel.u - k.cx) * g.y0 * k.fy / (dv * k.fx)
    z = g.y0 * k.fy / dv
    return CameraPoint(x, g.y0, z)


def depth_derivative(point: CameraPoint, k: CameraIntrinsics) -> DepthGradient:
    """Rate of pixel motion as the point recedes along the optical axis.

    Both components follow an inverse-square law in depth and vanish for
    points on the optical axis.
    """
    if point.z == 0:
        raise DepthNotPositive("depth derivative undefined at z=0")
    z2 = point.z * point.z
    return DepthGradient(-point.x * k.fx / z2, -point.y * k.fy / z2)


def perspective_angle(pixel: PixelCoord, k: CameraIntrinsics, g: GroundPlane,
                      horizon_epsilon: float = 1.0) -> float:
    """Angle between the pixel's depth-motion direction and the u-axis.

    Composes ground backprojection with the depth derivative and takes
    atan2(dv/dz, du/dz). Below the horizon this reduces to the direction
    from the pixel toward the principal point.
    """
    if horizon_epsilon <= 0:
        raise ValueError("horizon_epsilon must be positive")
    if abs(pixel.v - k.cy) < horizon_epsilon:
        raise HorizonSingularity(
            f"|v - cy| = {abs(pixel.v - k.cy)} inside the {horizon_epsilon}-pixel horizon band")
    grad = depth_derivative(backproject_ground(pixel, k, g), k)
    return math.atan2(grad.dv_dz, grad.du_dz)


def angle_field(width: int, height: int, k: CameraIntrinsics, g: GroundPlane,
                horizon_epsilon: float = 1.0,
                above_horizon: str = "verbatim") -> AngleField:
    """Perspective angle at every integer pixel center of a width x height grid.

    Pixel centers are the integer grid coordinates themselves (no half-pixel
    shift). Rows with |v - cy| < horizon_epsilon get the fallback angle and
    valid=False. ``above_horizon`` picks what happens where the ground
    intersection lands behind the camera: "verbatim" keeps the algebraic
    angle (it points away from the principal point there), "fallback" treats
    those pixels like the horizon band.

    Each output element depends only on its own pixel, so any row-parallel
    evaluation produces bitwise-identical results.
    """
    if width < 1 or height < 1:
        raise InvalidDimensions(f"angle field {width}x{height}")
    if horizon_epsilon <= 0:
        raise ValueError("horizon_epsilon must be positive")
    if above_horizon not in ABOVE_HORIZON_MODES:
        raise ValueError(f"above_horizon must be one of {ABOVE_HORIZON_MODES}")

    u = np.arange(width, dtype=np.float64)[None, :]
    v = np.arange(height, dtype=np.float64)[:, None]
    dv = v - k.cy                                   # [h, 1]
    valid_row = np.abs(dv) >= horizon_epsilon

    safe_dv = np.where(valid_row, dv, 1.0)          # dummy divisor inside the band
    z0 = g.y0 * k.fy / safe_dv                      # [h, 1]
    x0 = (u - k.cx) * g.y0 * k.fy / (safe_dv * k.fx)  # [h, w]
    z2 = z0 * z0
    du_dz = -x0 * k.fx / z2
    dv_dz = -g.y0 * k.fy / z2                       # [h, 1]
    ang = np.arctan2(dv_dz, du_dz)                  # broadcasts to [h, w]

    valid = np.broadcast_to(valid_row, (height, width))
    if above_horizon == "fallback":
        valid = valid & np.broadcast_to(z0 > 0, (height, width))
    valid = np.ascontiguousarray(valid)
    phi = np.where(valid, ang, FALLBACK_ANGLE)
    return AngleField(width, height, phi, valid)
