"""Command-line frontend.

Subcommands cover the pipeline end to end: angle-field, offsets, conv,
conv-std, module, gradcheck, and bench. Exit codes are 0 on success, 1 for
usage errors, and 2 for data or format errors; diagnostics go to standard
error. PAC_THREADS supplies the default worker count wherever --threads
is accepted.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .bench import checksums_agree, format_csv, format_table, run_bench
from .conv import (ConvParams, FORWARD_IMPLS, pac_conv_forward,
                   standard_conv_forward)
from .errors import PacError, ShapeMismatch
from .geometry import ABOVE_HORIZON_MODES, AngleField, GroundPlane, angle_field
from .gradcheck import run_all_checks
from .io_formats import parse_kitti_calib, read_pact, write_angle_ppm, write_pact
from .module import (DEFAULT_DILATIONS, PacBranchConfig, PacModuleConfig,
                     PacModuleParams, MANIFEST_NAME, init_params,
                     load_module_params, pac_module_forward, save_module_params)
from .offsets import KernelSpec, OffsetField, build_offset_field

DTYPES = {"f64": np.float64, "f32": np.float32}


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2 by default; this CLI reserves
    2 for data errors, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if val < 1:
        raise argparse.ArgumentTypeError(f"{val} must be >= 1")
    return val


def _nonneg_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if val < 0:
        raise argparse.ArgumentTypeError(f"{val} must be >= 0")
    return val


def _odd_int(text: str) -> int:
    val = _positive_int(text)
    if val % 2 == 0:
        raise argparse.ArgumentTypeError(f"{val} must be odd")
    return val


def _finite_float(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not np.isfinite(val):
        raise argparse.ArgumentTypeError(f"{val} must be finite")
    return val


def _nonzero_float(text: str) -> float:
    val = _finite_float(text)
    if val == 0.0:
        raise argparse.ArgumentTypeError("value must be nonzero")
    return val


def _positive_float(text: str) -> float:
    val = _finite_float(text)
    if val <= 0.0:
        raise argparse.ArgumentTypeError(f"{val} must be > 0")
    return val


def _shape4(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"{text!r} must be N,C,H,W")
    return tuple(_positive_int(p) for p in parts)


def _dilation_list(text: str) -> tuple[int, ...]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("empty dilation list")
    return tuple(_positive_int(p) for p in parts)


def _default_threads() -> int:
    raw = os.environ.get("PAC_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _read_calib(path: str):
    with open(path, encoding="ascii", errors="replace") as fh:
        return parse_kitti_calib(fh.read())


def _read_angles(path: str) -> AngleField:
    phi = read_pact(path)
    if phi.ndim != 2:
        raise ShapeMismatch(f"angle tensor must be rank 2, got shape {phi.shape}")
    mask = read_pact(path + ".mask")
    if mask.shape != phi.shape:
        raise ShapeMismatch(f"mask shaped {mask.shape}, angles shaped {phi.shape}")
    h, w = phi.shape
    return AngleField(w, h, np.asarray(phi, dtype=np.float64), mask != 0.0)


def cmd_angle_field(args) -> int:
    k = _read_calib(args.calib)
    if args.stride is not None:
        k = k.scaled(args.stride)
    field = angle_field(args.width, args.height, k, GroundPlane(args.ground_y),
                        horizon_epsilon=args.horizon_eps,
                        above_horizon=args.above_horizon)
    write_pact(field.phi, args.out)
    write_pact(field.valid.astype(np.float64), args.out + ".mask")
    if args.ppm is not None:
        write_angle_ppm(field, args.ppm)
    return 0


def cmd_offsets(args) -> int:
    field = _read_angles(args.angles)
    spec = KernelSpec(args.rows, args.cols, args.dilation)
    offsets = build_offset_field(field, spec)
    write_pact(offsets.offsets, args.out)
    return 0


def _load_offsets(path: str) -> OffsetField:
    arr = read_pact(path)
    if arr.ndim != 4 or arr.shape[-1] != 2:
        raise ShapeMismatch(f"offset tensor must be [h, w, taps, 2], got {arr.shape}")
    h, w, taps = arr.shape[0], arr.shape[1], arr.shape[2]
    return OffsetField(w, h, taps, arr)


def cmd_conv(args) -> int:
    x = read_pact(args.input)
    weights = read_pact(args.weights)
    bias = read_pact(args.bias) if args.bias is not None else None
    params = ConvParams(weights, bias)
    offsets = _load_offsets(args.offsets)
    out = pac_conv_forward(x, params, offsets, impl=args.impl, threads=args.threads)
    write_pact(out, args.out)
    return 0


def cmd_conv_std(args) -> int:
    x = read_pact(args.input)
    weights = read_pact(args.weights)
    bias = read_pact(args.bias) if args.bias is not None else None
    out = standard_conv_forward(x, ConvParams(weights, bias), args.dilation)
    write_pact(out, args.out)
    return 0


def cmd_module(args) -> int:
    x = read_pact(args.input)
    if x.ndim != 4:
        raise ShapeMismatch(f"input must be NCHW, got shape {x.shape}")
    n, c_in, h, w = x.shape
    k = _read_calib(args.calib)
    angles = angle_field(w, h, k, GroundPlane(args.ground_y))

    manifest = (os.path.join(args.params, MANIFEST_NAME)
                if args.params is not None else None)
    if manifest is not None and os.path.exists(manifest):
        branches, params = load_module_params(args.params)
        c_mid = params.branch_params[0].weights.shape[0]
        c_out = params.fusion.weights.shape[0]
        config = PacModuleConfig(c_in=c_in, c_out=c_out, c_mid=c_mid,
                                 branches=branches, seed=args.seed)
        if params.branch_params[0].weights.shape[1] != c_in:
            raise ShapeMismatch(
                f"loaded params expect {params.branch_params[0].weights.shape[1]} "
                f"input channels, input has {c_in}")
    else:
        c_out = args.c_out if args.c_out is not None else c_in
        branches = (PacBranchConfig("standard", 1),
                    *(PacBranchConfig("perspective", d) for d in args.dilations))
        config = PacModuleConfig(c_in=c_in, c_out=c_out, branches=branches,
                                 seed=args.seed)
        params = init_params(config, dtype=x.dtype)
        if args.params is not None:
            save_module_params(args.params, config, params)

    out = pac_module_forward(x, params, config, angles, threads=args.threads)
    write_pact(out, args.out)
    return 0


def cmd_gradcheck(args) -> int:
    reports = run_all_checks(args.seed, args.eps, DTYPES[args.dtype])
    ok = True
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.group:<24} max_rel_error={r.max_rel_error:.3e} "
              f"tolerance={r.tolerance:.0e} {status}")
        ok = ok and r.passed
    return 0 if ok else 2


def cmd_bench(args) -> int:
    n, c, h, w = args.shape
    impls = list(FORWARD_IMPLS) if args.impl == "both" else [args.impl]
    reports = [run_bench(impl, n, c, h, w, args.c_out, dilation=args.dilation,
                         repeat=args.repeat, threads=args.threads)
               for impl in impls]
    print(format_table(reports))
    if args.csv is not None:
        with open(args.csv, "w", encoding="ascii") as fh:
            fh.write(format_csv(reports) + "\n")
    if len(reports) == 2 and not checksums_agree(reports[0].checksum,
                                                 reports[1].checksum):
        print(f"pac bench: checksum mismatch between impls: "
              f"{reports[0].checksum!r} vs {reports[1].checksum!r}", file=sys.stderr)
        return 2
    return 0


def _add_threads_flag(sub):
    sub.add_argument("--threads", type=_positive_int, default=_default_threads(),
                     help="worker thread bound (default: PAC_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pac",
                     description="Perspective-aware convolution toolkit")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = subs.add_parser("angle-field", help="compute the per-pixel angle field")
    p.add_argument("--calib", required=True)
    p.add_argument("--width", type=_positive_int, required=True)
    p.add_argument("--height", type=_positive_int, required=True)
    p.add_argument("--ground-y", type=_nonzero_float, required=True)
    p.add_argument("--stride", type=_positive_int, default=None)
    p.add_argument("--horizon-eps", type=_positive_float, default=1.0)
    p.add_argument("--above-horizon", choices=ABOVE_HORIZON_MODES, default="verbatim")
    p.add_argument("--out", required=True)
    p.add_argument("--ppm", default=None)
    p.set_defaults(func=cmd_angle_field)

    p = subs.add_parser("offsets", help="skewed kernel offsets from an angle field")
    p.add_argument("--angles", required=True)
    p.add_argument("--dilation", type=_positive_int, required=True)
    p.add_argument("--rows", type=_odd_int, default=3)
    p.add_argument("--cols", type=_odd_int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_offsets)

    p = subs.add_parser("conv", help="perspective convolution forward pass")
    p.add_argument("--input", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--bias", default=None)
    p.add_argument("--offsets", required=True)
    p.add_argument("--impl", choices=FORWARD_IMPLS, default="gather")
    _add_threads_flag(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_conv)

    p = subs.add_parser("conv-std", help="standard dilated convolution forward pass")
    p.add_argument("--input", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--bias", default=None)
    p.add_argument("--dilation", type=_positive_int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_conv_std)

    p = subs.add_parser("module", help="run the multi-branch module")
    p.add_argument("--input", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--ground-y", type=_nonzero_float, required=True)
    p.add_argument("--dilations", type=_dilation_list, default=DEFAULT_DILATIONS)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--params", default=None,
                   help="params directory: loaded if present, else written")
    p.add_argument("--c-out", type=_positive_int, default=None,
                   help="output channels when initializing (default: input channels)")
    _add_threads_flag(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_module)

    p = subs.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--eps", type=_positive_float, default=None)
    p.add_argument("--dtype", choices=sorted(DTYPES), default="f64")
    p.set_defaults(func=cmd_gradcheck)

    p = subs.add_parser("bench", help="time the conv implementations")
    p.add_argument("--shape", type=_shape4, required=True, metavar="N,C,H,W")
    p.add_argument("--c-out", type=_positive_int, required=True)
    p.add_argument("--dilation", type=_positive_int, default=2)
    p.add_argument("--repeat", type=_positive_int, default=3)
    _add_threads_flag(p)
    p.add_argument("--impl", choices=FORWARD_IMPLS + ("both",), default="both")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PacError as exc:
        print(f"pac: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pac: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
