"""Sampled convolution: bilinear forward/backward plus the dilated baseline.

Two forward paths implement one contract. ``naive`` walks output pixels and
accumulates into each output element channel-by-channel, tap-by-tap (c outer,
k inner). ``gather`` precomputes the four bilinear neighbor indices and
weights once per (pixel, tap), reuses them across batch and channels, and
reduces with einsum. einsum always runs with its default optimize=False:
those C loops are single-threaded and bitwise reproducible, unlike
BLAS-backed contractions whose summation order moves with the ambient
thread pool.

``threads`` bounds a row-block thread pool. Blocks have a fixed size
independent of the pool, and every output element is reduced entirely
inside its own block, so any thread count yields bitwise-identical output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInput, ShapeMismatch
from .offsets import OffsetField

_ROW_BLOCK = 32  # fixed so partitioning never depends on the thread count

FORWARD_IMPLS = ("naive", "gather")


@dataclass
class ConvParams:
    """Kernel weights [c_out, c_in, rows, cols] and optional bias [c_out].

    The flattened (rows, cols) axis pairs up with offset-field taps
    row-major, i outer / j inner.
    """

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights)
        if self.weights.ndim != 4:
            raise ShapeMismatch(f"weights must be rank 4, got {self.weights.shape}")
        if self.bias is not None:
            self.bias = np.asarray(self.bias)
            if self.bias.shape != (self.weights.shape[0],):
                raise ShapeMismatch(
                    f"bias shaped {self.bias.shape}, expected ({self.weights.shape[0]},)")

    @property
    def c_out(self) -> int:
        return self.weights.shape[0]

    @property
    def c_in(self) -> int:
        return self.weights.shape[1]

    @property
    def rows(self) -> int:
        return self.weights.shape[2]

    @property
    def cols(self) -> int:
        return self.weights.shape[3]

    @property
    def taps(self) -> int:
        return self.rows * self.cols


def bilinear_sample(plane: np.ndarray, x: float, y: float) -> float:
    """Zero-padded bilinear lookup at fractional (x, y) = (column, row)."""
    h, w = plane.shape
    x0 = math.floor(x)
    y0 = math.floor(y)
    fx = x - x0
    fy = y - y0
    val = 0.0
    for yn, wy in ((y0, 1.0 - fy), (y0 + 1, fy)):
        if wy == 0.0 or yn < 0 or yn >= h:
            continue
        for xn, wx in ((x0, 1.0 - fx), (x0 + 1, fx)):
            if wx == 0.0 or xn < 0 or xn >= w:
                continue
            val += wy * wx * float(plane[yn, xn])
    return val


def _bilinear_plan(offsets: OffsetField) -> tuple[np.ndarray, np.ndarray]:
    """Flat neighbor indices and weights, each shaped [4, taps, h, w].

    Out-of-image neighbors keep weight 0 and a clamped dummy index, which
    realizes zero padding without materializing a padded input.
    """
    h, w = offsets.height, offsets.width
    du = np.moveaxis(offsets.offsets[..., 0], -1, 0)  # [taps, h, w]
    dv = np.moveaxis(offsets.offsets[..., 1], -1, 0)
    xs = np.arange(w, dtype=np.float64)[None, None, :] + du
    ys = np.arange(h, dtype=np.float64)[None, :, None] + dv
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    corners = (
        (y0, x0, (1.0 - fy) * (1.0 - fx)),
        (y0, x0 + 1, (1.0 - fy) * fx),
        (y0 + 1, x0, fy * (1.0 - fx)),
        (y0 + 1, x0 + 1, fy * fx),
    )
    idx = np.empty((4,) + xs.shape, dtype=np.int64)
    wgt = np.empty((4,) + xs.shape, dtype=np.float64)
    for ci, (yy, xx, ww) in enumerate(corners):
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        idx[ci] = np.where(inside, yy * w + xx, 0)
        wgt[ci] = np.where(inside, ww, 0.0)
    return idx, wgt


def _check_conv_args(x: np.ndarray, params: ConvParams, offsets: OffsetField):
    if x.ndim != 4:
        raise ShapeMismatch(f"input must be NCHW, got shape {x.shape}")
    n, c_in, h, w = x.shape
    if (offsets.height, offsets.width) != (h, w):
        raise ShapeMismatch(
            f"offset field {offsets.height}x{offsets.width} vs input {h}x{w}")
    if offsets.taps != params.taps:
        raise ShapeMismatch(f"{offsets.taps} offset taps vs {params.taps} weight taps")
    if params.c_in != c_in:
        raise ShapeMismatch(f"input has {c_in} channels, weights expect {params.c_in}")
    if x.dtype not in (np.float32, np.float64) or params.weights.dtype != x.dtype:
        raise ShapeMismatch(
            f"input dtype {x.dtype} and weight dtype {params.weights.dtype} must both "
            "be f32 or f64 and agree")
    if params.bias is not None and params.bias.dtype != x.dtype:
        raise ShapeMismatch("bias dtype must match input dtype")


def _row_blocks(h: int):
    return [(r, min(r + _ROW_BLOCK, h)) for r in range(0, h, _ROW_BLOCK)]


def _run_blocks(fn, h: int, threads: int):
    blocks = _row_blocks(h)
    if threads <= 1 or len(blocks) == 1:
        for blk in blocks:
            fn(blk)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(fn, blocks))


def _forward_gather(x, params, offsets, threads):
    n, c_in, h, w = x.shape
    idx, wgt = _bilinear_plan(offsets)
    wgt = wgt.astype(x.dtype, copy=False)
    x_flat = x.reshape(n, c_in, h * w)
    wt = params.weights.reshape(params.c_out, c_in, params.taps)
    out = np.empty((n, params.c_out, h, w), dtype=x.dtype)

    def run(block):
        r0, r1 = block
        sampled = None
        for ci in range(4):
            gathered = x_flat[:, :, idx[ci, :, r0:r1, :]]       # [n, c, taps, bh, w]
            term = wgt[ci, :, r0:r1, :] * gathered
            sampled = term if sampled is None else sampled + term
        out[:, :, r0:r1, :] = np.einsum("nckvu,ock->novu", sampled, wt)

    _run_blocks(run, h, threads)
    if params.bias is not None:
        out += params.bias[None, :, None, None]
    return out


def _forward_naive(x, params, offsets, threads):
    n, c_in, h, w = x.shape
    c_out, taps = params.c_out, params.taps
    wt = params.weights.reshape(c_out, c_in, taps)
    offs = offsets.offsets
    out = np.empty((n, c_out, h, w), dtype=x.dtype)
    zero_bias = np.zeros(c_out, dtype=x.dtype)
    bias = params.bias if params.bias is not None else zero_bias

    def run(block):
        r0, r1 = block
        sampled = np.empty((n, c_in, taps), dtype=x.dtype)
        for v in range(r0, r1):
            for u in range(w):
                for k in range(taps):
                    xx = u + offs[v, u, k, 0]
                    yy = v + offs[v, u, k, 1]
                    x0 = math.floor(xx)
                    y0 = math.floor(yy)
                    fx = xx - x0
                    fy = yy - y0
                    sampled[:, :, k] = 0.0
                    for yn, wy in ((y0, 1.0 - fy), (y0 + 1, fy)):
                        if wy == 0.0 or yn < 0 or yn >= h:
                            continue
                        for xn, wx in ((x0, 1.0 - fx), (x0 + 1, fx)):
                            if wx == 0.0 or xn < 0 or xn >= w:
                                continue
                            sampled[:, :, k] += wy * wx * x[:, :, yn, xn]
                pix = np.tile(bias, (n, 1))                      # [n, c_out]
                for c in range(c_in):                            # documented order:
                    for k in range(taps):                        # c outer, k inner
                        pix += sampled[:, c, k][:, None] * wt[None, :, c, k]
                out[:, :, v, u] = pix

    _run_blocks(run, h, threads)
    return out


def pac_conv_forward(x: np.ndarray, params: ConvParams, offsets: OffsetField,
                     impl: str = "gather", threads: int = 1) -> np.ndarray:
    """Convolution sampling the input at per-pixel skewed tap positions.

    out[n, o, v, u] = bias[o] + sum over channels c and taps k of
    weights[o, c, k] * bilinear(input[n, c], u + du_k(u, v), v + dv_k(u, v)),
    with zero padding outside the image. Output keeps the input's spatial
    size and dtype.
    """
    if impl not in FORWARD_IMPLS:
        raise ValueError(f"impl must be one of {FORWARD_IMPLS}")
    _check_conv_args(x, params, offsets)
    finite = np.isfinite(x).all() and np.isfinite(params.weights).all()
    if params.bias is not None:
        finite = finite and np.isfinite(params.bias).all()
    if not finite:
        raise NonFiniteInput("conv inputs must be finite")
    threads = max(1, int(threads))
    if impl == "gather":
        return _forward_gather(x, params, offsets, threads)
    return _forward_naive(x, params, offsets, threads)


def pac_conv_backward(x: np.ndarray, params: ConvParams, offsets: OffsetField,
                      grad_output: np.ndarray):
    """Adjoint of pac_conv_forward for input, weights, and bias.

    Offsets are analytic constants, so they receive no gradient; the input
    gradient scatters through the same four bilinear coefficients the
    forward pass sampled with. Accumulation uses np.add.at, which applies
    updates in index order, deterministic for fixed inputs.

    Returns (grad_input, grad_weights, grad_bias); grad_bias is None when
    the layer has no bias.
    """
    _check_conv_args(x, params, offsets)
    n, c_in, h, w = x.shape
    if grad_output.shape != (n, params.c_out, h, w):
        raise ShapeMismatch(
            f"grad_output shaped {grad_output.shape}, expected {(n, params.c_out, h, w)}")
    if grad_output.dtype != x.dtype:
        raise ShapeMismatch("grad_output dtype must match input dtype")

    idx, wgt = _bilinear_plan(offsets)
    wgt = wgt.astype(x.dtype, copy=False)
    x_flat = x.reshape(n, c_in, h * w)
    wt = params.weights.reshape(params.c_out, c_in, params.taps)

    sampled = None
    for ci in range(4):
        term = wgt[ci] * x_flat[:, :, idx[ci]]
        sampled = term if sampled is None else sampled + term    # [n, c, taps, h, w]

    grad_w = np.einsum("novu,nckvu->ock", grad_output, sampled)
    grad_w = grad_w.reshape(params.weights.shape)
    grad_b = grad_output.sum(axis=(0, 2, 3)) if params.bias is not None else None

    upstream = np.einsum("novu,ock->nckvu", grad_output, wt)
    grad_x_flat = np.zeros((n, c_in, h * w), dtype=x.dtype)
    for ci in range(4):
        np.add.at(grad_x_flat, (slice(None), slice(None), idx[ci]), wgt[ci] * upstream)
    return grad_x_flat.reshape(x.shape), grad_w, grad_b


def _check_standard_args(x: np.ndarray, params: ConvParams, dilation: int):
    if x.ndim != 4:
        raise ShapeMismatch(f"input must be NCHW, got shape {x.shape}")
    if params.c_in != x.shape[1]:
        raise ShapeMismatch(f"input has {x.shape[1]} channels, weights expect {params.c_in}")
    if params.rows % 2 == 0 or params.cols % 2 == 0:
        raise ShapeMismatch("standard conv requires odd kernel extents")
    if dilation < 1:
        raise ValueError("dilation must be >= 1")
    if x.dtype not in (np.float32, np.float64) or params.weights.dtype != x.dtype:
        raise ShapeMismatch("input and weight dtypes must agree (f32 or f64)")


def standard_conv_forward(x: np.ndarray, params: ConvParams, dilation: int = 1) -> np.ndarray:
    """Plain zero-padded, stride-1 dilated cross-correlation ("same" size).

    Taps sit on the integer grid with no interpolation anywhere, which makes
    this an independent reference for the sampled path.
    """
    _check_standard_args(x, params, dilation)
    n, c_in, h, w = x.shape
    ph = dilation * (params.rows - 1) // 2
    pw = dilation * (params.cols - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    out = np.zeros((n, params.c_out, h, w), dtype=x.dtype)
    for ir in range(params.rows):
        for jc in range(params.cols):
            sl = xp[:, :, ir * dilation:ir * dilation + h, jc * dilation:jc * dilation + w]
            out += np.einsum("ncvu,oc->novu", sl, params.weights[:, :, ir, jc])
    if params.bias is not None:
        out += params.bias[None, :, None, None]
    return out


def standard_conv_backward(x: np.ndarray, params: ConvParams, grad_output: np.ndarray,
                           dilation: int = 1):
    """Adjoint of standard_conv_forward; returns (grad_input, grad_weights, grad_bias)."""
    _check_standard_args(x, params, dilation)
    n, c_in, h, w = x.shape
    if grad_output.shape != (n, params.c_out, h, w):
        raise ShapeMismatch(
            f"grad_output shaped {grad_output.shape}, expected {(n, params.c_out, h, w)}")
    ph = dilation * (params.rows - 1) // 2
    pw = dilation * (params.cols - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    grad_xp = np.zeros_like(xp)
    grad_w = np.zeros_like(params.weights)
    for ir in range(params.rows):
        for jc in range(params.cols):
            rs = slice(ir * dilation, ir * dilation + h)
            cs = slice(jc * dilation, jc * dilation + w)
            grad_w[:, :, ir, jc] = np.einsum("novu,ncvu->oc", grad_output, xp[:, :, rs, cs])
            grad_xp[:, :, rs, cs] += np.einsum("novu,oc->ncvu", grad_output,
                                               params.weights[:, :, ir, jc])
    grad_x = grad_xp[:, :, ph:ph + h, pw:pw + w] if (ph or pw) else grad_xp
    grad_b = grad_output.sum(axis=(0, 2, 3)) if params.bias is not None else None
    return np.ascontiguousarray(grad_x), grad_w, grad_b
