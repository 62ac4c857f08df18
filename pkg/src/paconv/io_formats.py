"""Tensor container files, calibration parsing, and angle visualization.

The tensor container is a small binary format: a 4-byte magic "PACT", a
version byte, a dtype byte (1 = float32, 2 = float64), a rank byte, one
zero pad byte, then rank little-endian u64 dimensions and the row-major
little-endian payload. Round-trips are bitwise, including NaN payloads.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import (BadMagic, MalformedNumber, MissingP2, NonPositiveFocal,
                     TruncatedPayload, UnknownDtype, UnsupportedVersion)
from .geometry import CameraIntrinsics

MAGIC = b"PACT"
VERSION = 1

_DTYPE_CODES = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}
_CODE_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}


def write_pact(tensor: np.ndarray, sink) -> None:
    """Serialize a float32 or float64 array to a path or binary file object."""
    # asarray keeps rank 0 intact; ascontiguousarray would promote it to rank 1
    arr = np.asarray(tensor, order="C")
    if arr.dtype not in _DTYPE_CODES:
        raise UnknownDtype(f"cannot serialize dtype {arr.dtype}")
    header = MAGIC + struct.pack("<BBBB", VERSION, _DTYPE_CODES[arr.dtype], arr.ndim, 0)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
    if hasattr(sink, "write"):
        sink.write(header + dims + payload)
    else:
        with open(sink, "wb") as fh:
            fh.write(header + dims + payload)


def read_pact(source) -> np.ndarray:
    """Inverse of write_pact. Accepts a path or a binary file object."""
    if hasattr(source, "read"):
        raw = source.read()
    else:
        with open(source, "rb") as fh:
            raw = fh.read()
    if len(raw) < 8:
        raise TruncatedPayload(f"file is {len(raw)} bytes, header needs 8")
    if raw[:4] != MAGIC:
        raise BadMagic(f"bad magic {raw[:4]!r}")
    version, dtype_code, rank, _pad = struct.unpack("<BBBB", raw[4:8])
    if version != VERSION:
        raise UnsupportedVersion(f"version {version}, expected {VERSION}")
    if dtype_code not in _CODE_DTYPES:
        raise UnknownDtype(f"dtype code {dtype_code}")
    dims_end = 8 + 8 * rank
    if len(raw) < dims_end:
        raise TruncatedPayload("file ends inside the dimension list")
    shape = struct.unpack(f"<{rank}Q", raw[8:dims_end])
    dtype = _CODE_DTYPES[dtype_code]
    count = 1
    for d in shape:
        count *= d
    expected = dims_end + count * dtype.itemsize
    if len(raw) != expected:
        raise TruncatedPayload(f"file is {len(raw)} bytes, expected {expected}")
    arr = np.frombuffer(raw[dims_end:], dtype=dtype).reshape(shape)
    return arr.astype(dtype.newbyteorder("="), copy=True).reshape(shape)


def parse_kitti_calib(text: str) -> CameraIntrinsics:
    """Extract pinhole intrinsics from a KITTI-style calibration file.

    Finds the line whose key is "P2", reads its 12 numbers as the row-major
    3x4 projection matrix, and returns fx = P[0][0], fy = P[1][1],
    cx = P[0][2], cy = P[1][2].
    """
    for line in text.splitlines():
        if not line.startswith("P2:"):
            continue
        fields = line[len("P2:"):].split()
        if len(fields) != 12:
            raise MalformedNumber(f"P2 line has {len(fields)} fields, expected 12")
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise MalformedNumber(f"P2 line holds a non-numeric field: {exc}") from exc
        if not all(np.isfinite(v) for v in vals):
            raise MalformedNumber("P2 line holds a non-finite value")
        fx, cx, fy, cy = vals[0], vals[2], vals[5], vals[6]
        if fx <= 0 or fy <= 0:
            raise NonPositiveFocal(f"focal lengths fx={fx}, fy={fy} must be positive")
        return CameraIntrinsics(fx, fy, cx, cy)
    raise MissingP2("no P2 line in calibration text")


def _hsv_hue_to_rgb(hue: np.ndarray) -> np.ndarray:
    """Full-saturation, full-value HSV to RGB. hue in degrees, any float shape."""
    h6 = (hue % 360.0) / 60.0
    sector = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    ramp_up = f
    ramp_down = 1.0 - f
    ones = np.ones_like(f)
    zeros = np.zeros_like(f)
    r = np.select([sector == 0, sector == 1, sector == 2,
                   sector == 3, sector == 4, sector == 5],
                  [ones, ramp_down, zeros, zeros, ramp_up, ones])
    g = np.select([sector == 0, sector == 1, sector == 2,
                   sector == 3, sector == 4, sector == 5],
                  [ramp_up, ones, ones, ramp_down, zeros, zeros])
    b = np.select([sector == 0, sector == 1, sector == 2,
                   sector == 3, sector == 4, sector == 5],
                  [zeros, zeros, ramp_up, ones, ones, ramp_down])
    return np.stack([r, g, b], axis=-1)


def write_angle_ppm(angles, sink) -> None:
    """Render an AngleField as a binary P6 image, hue encoding the angle.

    The angle range [-pi, pi] maps linearly onto the hue circle with
    phi = 0 at cyan (hue 180). Invalid pixels render black.
    """
    h, w = angles.height, angles.width
    hue = (angles.phi + np.pi) / (2.0 * np.pi) * 360.0
    rgb = _hsv_hue_to_rgb(hue)
    rgb = np.where(angles.valid[..., None], rgb, 0.0)
    pixels = np.round(rgb * 255.0).astype(np.uint8)
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    if hasattr(sink, "write"):
        sink.write(header + pixels.tobytes())
    else:
        with open(sink, "wb") as fh:
            fh.write(header + pixels.tobytes())
