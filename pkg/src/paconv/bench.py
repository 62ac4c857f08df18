"""Timing harness comparing the two convolution implementations.

Problems are synthesized deterministically: intrinsics follow the image
size (fx = fy = w, cx = w/2, cy = h/3), the camera sits 1.65 units above
the ground, and inputs and weights come from a seeded SplitMix64 stream.
Each report carries a checksum (the summed output) so runs double as a
cross-implementation consistency check.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from .conv import ConvParams, pac_conv_forward
from .geometry import CameraIntrinsics, GroundPlane, angle_field
from .offsets import KernelSpec, build_offset_field
from .rng import SplitMix64

CHECKSUM_TOLERANCE = 1e-10

CSV_COLUMNS = ("impl", "n", "c_in", "c_out", "h", "w", "taps", "reps",
               "ns_min", "ns_median", "ns_max", "checksum")


@dataclass
class BenchReport:
    impl: str
    n: int
    c_in: int
    c_out: int
    h: int
    w: int
    taps: int
    reps: int
    ns_min: int
    ns_median: int
    ns_max: int
    checksum: float

    def csv_row(self) -> str:
        return ",".join(str(getattr(self, col)) if col != "checksum"
                        else repr(self.checksum) for col in CSV_COLUMNS)


def make_problem(n: int, c_in: int, h: int, w: int, c_out: int,
                 dilation: int = 2, seed: int = 0):
    """Deterministic input, params, and offsets for a bench case."""
    k = CameraIntrinsics(float(w), float(w), w / 2.0, h / 3.0)
    g = GroundPlane(1.65)
    angles = angle_field(w, h, k, g)
    offsets = build_offset_field(angles, KernelSpec(3, 3, dilation))
    rng = SplitMix64(seed)
    x = rng.uniform(-1.0, 1.0, (n, c_in, h, w))
    weights = rng.uniform(-1.0, 1.0, (c_out, c_in, 3, 3))
    bias = rng.uniform(-1.0, 1.0, (c_out,))
    return x, ConvParams(weights, bias), offsets


def run_bench(impl: str, n: int, c_in: int, h: int, w: int, c_out: int,
              dilation: int = 2, repeat: int = 3, threads: int = 1,
              seed: int = 0) -> BenchReport:
    """Time one implementation, returning min/median/max wall time in ns."""
    x, params, offsets = make_problem(n, c_in, h, w, c_out, dilation, seed)
    times = []
    out = None
    for _ in range(max(1, repeat)):
        t0 = time.perf_counter_ns()
        out = pac_conv_forward(x, params, offsets, impl=impl, threads=threads)
        times.append(time.perf_counter_ns() - t0)
    return BenchReport(
        impl=impl, n=n, c_in=c_in, c_out=c_out, h=h, w=w,
        taps=offsets.taps, reps=len(times),
        ns_min=min(times),
        ns_median=int(statistics.median(times)),
        ns_max=max(times),
        checksum=float(np.sum(out)))


def checksums_agree(a: float, b: float, tol: float = CHECKSUM_TOLERANCE) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def format_table(reports: list[BenchReport]) -> str:
    rows = [CSV_COLUMNS]
    for r in reports:
        rows.append(tuple(f"{getattr(r, col):.6e}" if col == "checksum"
                          else str(getattr(r, col)) for col in CSV_COLUMNS))
    widths = [max(len(row[i]) for row in rows) for i in range(len(CSV_COLUMNS))]
    return "\n".join("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row))
                     for row in rows)


def format_csv(reports: list[BenchReport]) -> str:
    return "\n".join([",".join(CSV_COLUMNS)] + [r.csv_row() for r in reports])
