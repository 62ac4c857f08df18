"""Skewed kernel tap offsets derived from perspective angles.

Kernel rows stay horizontal while the column axis tilts onto the pixel's
depth axis: tap (i, j) sits at dilation * (j * e_u + i * e_phi), with
e_u = (1, 0) and e_phi = (cos phi, sin phi). An angle of +pi/2 reproduces
the ordinary dilated grid (up to f64 rounding of cos(pi/2)), so horizon
fallback pixels degrade to standard dilated convolution. Offsets are
analytic and fixed, never learned, which keeps them out of the backward
pass entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensions, NonFiniteInput, ShapeMismatch
from .geometry import AngleField


@dataclass(frozen=True)
class KernelSpec:
    """Tap grid geometry: odd rows x cols, spaced by an integer dilation."""

    rows: int = 3
    cols: int = 3
    dilation: int = 1

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.rows % 2 == 0 or self.cols % 2 == 0:
            raise ValueError("kernel rows and cols must be odd and positive")
        if self.dilation < 1:
            raise ValueError("dilation must be >= 1")

    @property
    def taps(self) -> int:
        return self.rows * self.cols


def tap_indices(spec: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Centered (i, j) indices of every tap, row-major (i outer, j inner)."""
    half_r = (spec.rows - 1) // 2
    half_c = (spec.cols - 1) // 2
    ii = np.repeat(np.arange(-half_r, half_r + 1, dtype=np.float64), spec.cols)
    jj = np.tile(np.arange(-half_c, half_c + 1, dtype=np.float64), spec.rows)
    return ii, jj


def kernel_offsets(phi: float, spec: KernelSpec) -> np.ndarray:
    """(du, dv) displacement of every tap for one angle, shape [taps, 2].

    The center tap is exactly (0, 0) for any angle.
    """
    if not np.isfinite(phi):
        raise ValueError("phi must be finite")
    c = np.cos(phi)
    s = np.sin(phi)
    ii, jj = tap_indices(spec)
    du = spec.dilation * (jj + ii * c)
    dv = spec.dilation * (ii * s)
    return np.stack([du, dv], axis=-1)


class OffsetField:
    """Per-pixel, per-tap fractional sample displacements, shape [h, w, taps, 2]."""

    __slots__ = ("width", "height", "taps", "offsets")

    def __init__(self, width: int, height: int, taps: int, offsets: np.ndarray):
        if width < 1 or height < 1 or taps < 1:
            raise InvalidDimensions(f"offset field {width}x{height} with {taps} taps")
        offsets = np.asarray(offsets, dtype=np.float64)
        if offsets.shape != (height, width, taps, 2):
            raise ShapeMismatch(
                f"offsets shaped {offsets.shape}, expected {(height, width, taps, 2)}")
        if not np.isfinite(offsets).all():
            raise NonFiniteInput("offset field contains non-finite displacements")
        self.width = width
        self.height = height
        self.taps = taps
        self.offsets = offsets


def build_offset_field(angles: AngleField, spec: KernelSpec) -> OffsetField:
    """Offsets of every tap at every pixel of an angle field.

    Invalid pixels already carry the fallback angle, so no branching is
    needed here; each pixel's taps equal kernel_offsets of its own angle,
    bitwise.
    """
    if angles.width < 1 or angles.height < 1:
        raise InvalidDimensions("empty angle field")
    c = np.cos(angles.phi)[..., None]   # [h, w, 1]
    s = np.sin(angles.phi)[..., None]
    ii, jj = tap_indices(spec)
    du = spec.dilation * (jj + ii * c)  # [h, w, taps]
    dv = spec.dilation * (ii * s)
    offsets = np.stack([du, dv], axis=-1)
    return OffsetField(angles.width, angles.height, spec.taps, offsets)
