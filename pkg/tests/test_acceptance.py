"""Acceptance suite: one test per release criterion.

Each test prints exactly one PASS/FAIL line straight to the terminal
(bypassing capture) and then asserts, so the suite gates CI while staying
readable when run standalone. Criteria carry explicit numeric tolerances
and wall-time budgets; both are enforced.
"""

import math
import subprocess
import sys
import time

import numpy as np

from paconv import (AngleField, CameraIntrinsics, ConvParams, GroundPlane,
                    KernelSpec, PacBranchConfig, PacModuleConfig,
                    PacModuleParams, PixelCoord, SplitMix64, angle_field,
                    backproject_ground, build_offset_field, init_params,
                    pac_conv_backward, pac_conv_forward, pac_module_forward,
                    parse_kitti_calib, project, read_pact, run_all_checks,
                    standard_conv_forward, write_pact)
from paconv.bench import run_bench
from paconv.cli import main as cli_main

from conftest import KITTI_CALIB_SAMPLE
from oracles import ref_pac_conv


def report(capsys, num, label, ok, detail=""):
    line = f"ACCEPTANCE {num} [{label}]: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


def test_01_geometry_roundtrip(capsys):
    # project(backproject_ground(p)) == p to 1e-9 on 10,000 below-horizon
    # pixels over 5 random intrinsics, in under a second
    t0 = time.perf_counter()
    rng = SplitMix64(101)
    worst = 0.0
    for _ in range(5):
        fx = float(rng.uniform(300.0, 1200.0, ()))
        fy = float(rng.uniform(300.0, 1200.0, ()))
        cx = float(rng.uniform(400.0, 800.0, ()))
        cy = float(rng.uniform(100.0, 300.0, ()))
        k = CameraIntrinsics(fx, fy, cx, cy)
        g = GroundPlane(1.65)
        us = rng.uniform(-200.0, 1600.0, (2000,))
        vs = rng.uniform(cy + 0.5, cy + 600.0, (2000,))
        for u, v in zip(us, vs):
            back = project(backproject_ground(PixelCoord(u, v), k, g), k)
            worst = max(worst, abs(back.u - u), abs(back.v - v))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 1.0
    report(capsys, 1, "geometry round-trip", ok,
           f"max err {worst:.2e}, {elapsed:.2f}s")


def test_02_vanishing_point_invariant(capsys):
    # below the horizon every angle must point at the principal point, for
    # any ground height or focal length
    t0 = time.perf_counter()
    cx, cy = 609.5593, 172.854
    w, h = 1280, 384
    u = np.arange(w, dtype=np.float64)[None, :]
    v = np.arange(h, dtype=np.float64)[:, None]
    below = np.broadcast_to(v - cy >= 1.0, (h, w))

    fields = []
    worst_cross = 0.0
    for y0 in (1.0, 1.65, 2.2):
        for f in (500.0, 721.5377):
            field = angle_field(w, h, CameraIntrinsics(f, f, cx, cy), GroundPlane(y0))
            assert field.valid[below].all()
            fields.append(field.phi)
            nx = np.broadcast_to(cx - u, (h, w))[below]
            ny = np.broadcast_to(cy - v, (h, w))[below]
            norm = np.hypot(nx, ny)
            cross = np.cos(field.phi[below]) * (ny / norm) - \
                np.sin(field.phi[below]) * (nx / norm)
            worst_cross = max(worst_cross, float(np.abs(cross).max()))

    worst_delta = 0.0
    for other in fields[1:]:
        worst_delta = max(worst_delta,
                          float(np.abs(other[below] - fields[0][below]).max()))
    elapsed = time.perf_counter() - t0
    ok = worst_cross < 1e-9 and worst_delta < 1e-9 and elapsed < 5.0
    report(capsys, 2, "vanishing-point invariant", ok,
           f"cross {worst_cross:.2e}, delta-phi {worst_delta:.2e}, {elapsed:.2f}s")


def test_03_closed_form_agreement(capsys):
    # the backprojection/derivative composition reduces to the direction
    # toward the principal point below the horizon
    k = CameraIntrinsics(721.5377, 721.5377, 609.5593, 172.854)
    w, h = 1280, 384
    field = angle_field(w, h, k, GroundPlane(1.65))
    u = np.arange(w, dtype=np.float64)[None, :]
    v = np.arange(h, dtype=np.float64)[:, None]
    below = np.broadcast_to(v - k.cy >= 1.0, (h, w))
    closed = np.arctan2(np.broadcast_to(k.cy - v, (h, w)),
                        np.broadcast_to(k.cx - u, (h, w)))
    worst = float(np.abs(field.phi[below] - closed[below]).max())
    ok = worst < 1e-9
    report(capsys, 3, "closed-form agreement", ok, f"max err {worst:.2e}")


def test_04_equivalence_oracle(capsys):
    # a uniform upright field makes the sampled conv a standard dilated conv;
    # the mirrored field reads the kernel rows in reverse
    t0 = time.perf_counter()
    worst = 0.0
    rng = SplitMix64(404)
    for dilation in (1, 2, 4, 6, 8):
        x = rng.uniform(-1.0, 1.0, (2, 4, 16, 16))
        weights = rng.uniform(-1.0, 1.0, (3, 4, 3, 3))
        bias = rng.uniform(-1.0, 1.0, (3,))
        params = ConvParams(weights, bias)
        spec = KernelSpec(3, 3, dilation)

        up = build_offset_field(AngleField.uniform(16, 16, math.pi / 2), spec)
        want_up = standard_conv_forward(x, params, dilation)
        down = build_offset_field(AngleField.uniform(16, 16, -math.pi / 2), spec)
        want_down = standard_conv_forward(
            x, ConvParams(weights[:, :, ::-1, :].copy(), bias), dilation)
        for impl in ("naive", "gather"):
            got_up = pac_conv_forward(x, params, up, impl=impl)
            worst = max(worst, float(np.abs(got_up - want_up).max()))
            got_down = pac_conv_forward(x, params, down, impl=impl)
            worst = max(worst, float(np.abs(got_down - want_down).max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 10.0
    report(capsys, 4, "standard-conv equivalence", ok,
           f"max err {worst:.2e}, {elapsed:.2f}s")


def test_05_brute_force_oracle(capsys):
    # both implementations against the scalar quadruple-loop reference
    t0 = time.perf_counter()
    rng = SplitMix64(505)
    worst = 0.0
    for case in range(20):
        n = 1 + case % 2
        c_in = 1 + case % 3
        c_out = 1 + case % 4
        h = 4 + case % 4
        w = 5 + case % 3
        dilation = 1 + case % 4
        x = rng.uniform(-1.0, 1.0, (n, c_in, h, w))
        weights = rng.uniform(-1.0, 1.0, (c_out, c_in, 3, 3))
        bias = rng.uniform(-1.0, 1.0, (c_out,)) if case % 2 else None
        phi = rng.uniform(-math.pi, math.pi, (h, w))
        field = AngleField(w, h, phi, np.ones((h, w), dtype=bool))
        offsets = build_offset_field(field, KernelSpec(3, 3, dilation))
        want = ref_pac_conv(x, weights, bias, offsets.offsets)
        params = ConvParams(weights, bias)
        for impl in ("naive", "gather"):
            got = pac_conv_forward(x, params, offsets, impl=impl)
            worst = max(worst, float(np.abs(got - want).max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 10.0
    report(capsys, 5, "brute-force oracle", ok,
           f"max err {worst:.2e}, {elapsed:.2f}s")


def test_06_gradient_checks(capsys):
    t0 = time.perf_counter()
    reports = run_all_checks(seed=0, eps=1e-6, dtype=np.float64)
    worst = max(r.max_rel_error for r in reports)
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in reports) and worst < 1e-6 and elapsed < 60.0
    report(capsys, 6, "gradient checks", ok,
           f"max rel err {worst:.2e} over {len(reports)} groups, {elapsed:.2f}s")


def test_07_adjoint_identity(capsys):
    # <g, conv(x)> == <conv^T(g), x> for the bias-free linear operator
    rng = SplitMix64(707)
    worst = 0.0
    for case in range(10):
        n = 1 + case % 2
        c_in = 1 + case % 3
        c_out = 1 + (case + 1) % 3
        h = 5 + case % 3
        w = 6 + case % 4
        x = rng.uniform(-1.0, 1.0, (n, c_in, h, w))
        weights = rng.uniform(-1.0, 1.0, (c_out, c_in, 3, 3))
        params = ConvParams(weights)
        phi = rng.uniform(-math.pi, math.pi, (h, w))
        field = AngleField(w, h, phi, np.ones((h, w), dtype=bool))
        offsets = build_offset_field(field, KernelSpec(3, 3, 1 + case % 4))
        g = rng.uniform(-1.0, 1.0, (n, c_out, h, w))
        lhs = float(np.sum(g * pac_conv_forward(x, params, offsets)))
        gx, _, _ = pac_conv_backward(x, params, offsets, g)
        rhs = float(np.sum(gx * x))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    ok = worst < 1e-10
    report(capsys, 7, "adjoint identity", ok, f"max rel err {worst:.2e}")


def test_08_module_degeneracies(capsys):
    c = 3
    rng = SplitMix64(808)
    x = rng.uniform(-1.0, 1.0, (2, c, 10, 12))
    phi = rng.uniform(-math.pi, math.pi, (10, 12))
    field = AngleField(12, 10, phi, np.ones((10, 12), dtype=bool))

    # a lone standard branch behind an identity fusion is a plain 3x3 conv
    solo = PacModuleConfig(c_in=c, c_out=c, c_mid=c,
                           branches=(PacBranchConfig("standard", 1),),
                           activation="none", seed=1)
    params = init_params(solo)
    params.fusion.weights[:] = 0.0
    for i in range(c):
        params.fusion.weights[i, i, 0, 0] = 1.0
    got = pac_module_forward(x, params, solo, field)
    want = standard_conv_forward(x, params.branch_params[0], 1)
    err_solo = float(np.abs(got - want).max())

    # zeroed perspective fusion columns leave the standard-branch computation
    full_cfg = PacModuleConfig(c_in=c, c_out=4, c_mid=2, seed=2)
    full = init_params(full_cfg)
    full.fusion.weights[:, full_cfg.c_mid:, :, :] = 0.0
    std_cfg = PacModuleConfig(c_in=c, c_out=4, c_mid=2,
                              branches=(PacBranchConfig("standard", 1),), seed=2)
    std = PacModuleParams(
        [full.branch_params[0]],
        ConvParams(full.fusion.weights[:, :full_cfg.c_mid].copy(), full.fusion.bias))
    err_zero = float(np.abs(pac_module_forward(x, full, full_cfg, field) -
                            pac_module_forward(x, std, std_cfg, field)).max())

    ok = err_solo < 1e-12 and err_zero < 1e-12
    report(capsys, 8, "module degeneracies", ok,
           f"solo {err_solo:.2e}, zeroed {err_zero:.2e}")


def test_09_serialization(capsys, tmp_path):
    rng = SplitMix64(909)
    ok = True
    for case in range(100):
        rank = case % 5
        shape = tuple(1 + int(rng.uniform(0.0, 5.0, ())) for _ in range(rank))
        dtype = np.float32 if case % 2 else np.float64
        arr = rng.uniform(-100.0, 100.0, shape).astype(dtype)
        if case % 10 == 3 and arr.size:
            flat = arr.reshape(-1)
            flat[:: max(1, arr.size // 3)] = np.nan
        path = tmp_path / f"t{case}.pact"
        write_pact(arr, str(path))
        back = read_pact(str(path))
        ok = ok and back.dtype == arr.dtype and back.shape == arr.shape
        ok = ok and back.tobytes() == arr.tobytes()

    k = parse_kitti_calib(KITTI_CALIB_SAMPLE)
    golden = (k.fx == 721.5377 and k.fy == 721.5377
              and k.cx == 609.5593 and k.cy == 172.854)
    ok = ok and golden
    report(capsys, 9, "serialization", ok,
           f"100 tensors bitwise, calib golden {'ok' if golden else 'BAD'}")


def test_10_determinism(capsys, tmp_path):
    # thread counts must be invisible; separate processes must agree bitwise
    x, params, offsets = None, None, None
    rng = SplitMix64(1010)
    x = rng.uniform(-1.0, 1.0, (2, 3, 40, 24))
    params = ConvParams(rng.uniform(-1.0, 1.0, (4, 3, 3, 3)),
                        rng.uniform(-1.0, 1.0, (4,)))
    phi = rng.uniform(-math.pi, math.pi, (40, 24))
    field = AngleField(24, 40, phi, np.ones((40, 24), dtype=bool))
    offsets = build_offset_field(field, KernelSpec(3, 3, 2))
    threads_ok = True
    for impl in ("naive", "gather"):
        base = pac_conv_forward(x, params, offsets, impl=impl, threads=1)
        for t in (2, 8):
            other = pac_conv_forward(x, params, offsets, impl=impl, threads=t)
            threads_ok = threads_ok and np.array_equal(base, other)

    calib = tmp_path / "calib.txt"
    calib.write_text(KITTI_CALIB_SAMPLE)
    write_pact(rng.uniform(-1.0, 1.0, (1, 2, 12, 16)), str(tmp_path / "x.pact"))
    outs = []
    for run in range(2):
        out = tmp_path / f"run{run}.pact"
        proc = subprocess.run(
            [sys.executable, "-m", "paconv", "module",
             "--input", str(tmp_path / "x.pact"), "--calib", str(calib),
             "--ground-y", "1.65", "--seed", "7", "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    process_ok = outs[0] == outs[1]

    ok = threads_ok and process_ok
    report(capsys, 10, "determinism", ok,
           f"threads {'ok' if threads_ok else 'BAD'}, "
           f"processes {'ok' if process_ok else 'BAD'}")


def test_11_benchmark_sanity(capsys, tmp_path):
    t0 = time.perf_counter()
    reports = [run_bench(impl, 1, 16, 128, 128, 16, repeat=1)
               for impl in ("naive", "gather")]
    a, b = (r.checksum for r in reports)
    delta = abs(a - b) / max(1.0, abs(a), abs(b))

    csv = tmp_path / "bench.csv"
    rc = cli_main(["bench", "--shape", "1,2,16,16", "--c-out", "2",
                   "--repeat", "1", "--impl", "both", "--csv", str(csv)])
    text_out = capsys.readouterr().out
    csv_lines = csv.read_text().strip().splitlines()
    emits_ok = (rc == 0 and "ns_median" in text_out and len(csv_lines) == 3
                and csv_lines[0].startswith("impl,"))
    elapsed = time.perf_counter() - t0
    ok = delta <= 1e-10 and emits_ok and elapsed < 60.0
    report(capsys, 11, "benchmark sanity", ok,
           f"checksum delta {delta:.2e}, {elapsed:.1f}s")
