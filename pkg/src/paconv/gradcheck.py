"""Central-difference verification of the analytic gradients.

Every check drives a scalar loss sum(output * cotangent) with a fixed random
cotangent, compares the analytic gradient of each parameter group against
central differences, and reports the worst relative error per group with
rel(a, n) = |a - n| / max(1, |a|, |n|).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv import ConvParams, pac_conv_backward, pac_conv_forward
from .geometry import AngleField
from .module import (PacBranchConfig, PacModuleConfig, init_params,
                     pac_module_backward, pac_module_forward)
from .offsets import KernelSpec, build_offset_field
from .rng import SplitMix64

DEFAULT_EPS = {np.float64: 1e-6, np.float32: 1e-2}
TOLERANCE = {np.float64: 1e-6, np.float32: 1e-2}


@dataclass
class GradReport:
    group: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def _rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def numeric_gradient(loss_fn, arr: np.ndarray, eps: float) -> np.ndarray:
    """Central differences of loss_fn with respect to every entry of arr.

    loss_fn takes the perturbed array and returns a python float. arr is
    restored to its original values before returning.
    """
    grad = np.zeros(arr.shape, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = loss_fn(arr)
        flat[i] = keep - eps
        lo = loss_fn(arr)
        flat[i] = keep
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad


def _resolve(dtype, eps):
    key = np.dtype(dtype).type
    if eps is None:
        eps = DEFAULT_EPS[key]
    return key, eps, TOLERANCE[key]


def check_conv_gradients(seed: int = 0, eps: float | None = None,
                         dtype=np.float64) -> list[GradReport]:
    """Gradcheck the perspective convolution on a small fixed problem."""
    key, eps, tol = _resolve(dtype, eps)
    n, c_in, h, w, c_out = 2, 3, 8, 8, 4
    rng = SplitMix64(seed)
    x = rng.uniform(-1.0, 1.0, (n, c_in, h, w)).astype(key)
    weights = rng.uniform(-1.0, 1.0, (c_out, c_in, 3, 3)).astype(key)
    bias = rng.uniform(-1.0, 1.0, (c_out,)).astype(key)
    cot = rng.uniform(-1.0, 1.0, (n, c_out, h, w)).astype(key)
    phi = rng.uniform(-np.pi, np.pi, (h, w))
    angles = AngleField(w, h, phi, np.ones((h, w), dtype=bool))
    offsets = build_offset_field(angles, KernelSpec(3, 3, 2))

    params = ConvParams(weights, bias)
    gx, gw, gb = pac_conv_backward(x, params, offsets, cot)

    def loss_x(arr):
        return float(np.sum(pac_conv_forward(arr, params, offsets) * cot))

    def loss_w(arr):
        return float(np.sum(pac_conv_forward(x, ConvParams(arr, bias), offsets) * cot))

    def loss_b(arr):
        return float(np.sum(pac_conv_forward(x, ConvParams(weights, arr), offsets) * cot))

    return [
        GradReport("conv/input", _rel_error(gx, numeric_gradient(loss_x, x, eps)), tol),
        GradReport("conv/weights", _rel_error(gw, numeric_gradient(loss_w, weights, eps)), tol),
        GradReport("conv/bias", _rel_error(gb, numeric_gradient(loss_b, bias, eps)), tol),
    ]


def check_module_gradients(seed: int = 0, eps: float | None = None,
                           dtype=np.float64) -> list[GradReport]:
    """Gradcheck the full module on a small problem, activation disabled.

    ReLU is not differentiable at 0, so the module check runs with the
    identity activation; the ReLU path is exercised by unit tests away
    from the kink.
    """
    key, eps, tol = _resolve(dtype, eps)
    n, c_in, h, w, c_out = 2, 2, 6, 6, 3
    config = PacModuleConfig(
        c_in=c_in, c_out=c_out, c_mid=2,
        branches=(PacBranchConfig("standard", 1), PacBranchConfig("perspective", 2)),
        activation="none", seed=seed)
    params = init_params(config, dtype=key)
    rng = SplitMix64(seed + 1)
    x = rng.uniform(-1.0, 1.0, (n, c_in, h, w)).astype(key)
    cot = rng.uniform(-1.0, 1.0, (n, c_out, h, w)).astype(key)
    phi = rng.uniform(-np.pi, np.pi, (h, w))
    angles = AngleField(w, h, phi, np.ones((h, w), dtype=bool))

    gx, gp = pac_module_backward(x, params, config, angles, cot)

    def loss(arr):
        return float(np.sum(pac_module_forward(arr, params, config, angles) * cot))

    reports = [GradReport("module/input",
                          _rel_error(gx, numeric_gradient(loss, x, eps)), tol)]

    def loss_params(_):
        return float(np.sum(pac_module_forward(x, params, config, angles) * cot))

    for i, bp in enumerate(params.branch_params):
        num_w = numeric_gradient(loss_params, bp.weights, eps)
        reports.append(GradReport(f"module/branch{i}.weights",
                                  _rel_error(gp.branch_params[i].weights, num_w), tol))
        num_b = numeric_gradient(loss_params, bp.bias, eps)
        reports.append(GradReport(f"module/branch{i}.bias",
                                  _rel_error(gp.branch_params[i].bias, num_b), tol))
    num_fw = numeric_gradient(loss_params, params.fusion.weights, eps)
    reports.append(GradReport("module/fusion.weights",
                              _rel_error(gp.fusion.weights, num_fw), tol))
    num_fb = numeric_gradient(loss_params, params.fusion.bias, eps)
    reports.append(GradReport("module/fusion.bias",
                              _rel_error(gp.fusion.bias, num_fb), tol))
    return reports


def run_all_checks(seed: int = 0, eps: float | None = None,
                   dtype=np.float64) -> list[GradReport]:
    return check_conv_gradients(seed, eps, dtype) + check_module_gradients(seed, eps, dtype)
