"""Multi-branch perspective convolution module.

Parallel 3x3 branches, one standard and several perspective-skewed at
increasing dilation rates, are applied to the same input, activated,
concatenated along channels, and fused by a 1x1 convolution. The angle
field belongs to the camera, not to any branch, so one shared field feeds
every branch's offset construction at that branch's dilation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .conv import (ConvParams, pac_conv_backward, pac_conv_forward,
                   standard_conv_backward, standard_conv_forward)
from .errors import ShapeMismatch
from .geometry import AngleField
from .io_formats import read_pact, write_pact
from .offsets import KernelSpec, build_offset_field
from .rng import SplitMix64

BRANCH_KINDS = ("standard", "perspective")
ACTIVATIONS = ("none", "relu")
DEFAULT_DILATIONS = (2, 4, 6, 8)

MANIFEST_NAME = "manifest.txt"


@dataclass(frozen=True)
class PacBranchConfig:
    kind: str
    dilation: int = 1

    def __post_init__(self):
        if self.kind not in BRANCH_KINDS:
            raise ValueError(f"branch kind must be one of {BRANCH_KINDS}")
        if self.dilation < 1:
            raise ValueError("dilation must be >= 1")
        if self.kind == "standard" and self.dilation != 1:
            raise ValueError("the standard branch uses dilation 1")


def default_branches() -> tuple[PacBranchConfig, ...]:
    """One standard 3x3 branch plus perspective branches at dilations 2, 4, 6, 8."""
    return (PacBranchConfig("standard", 1),
            *(PacBranchConfig("perspective", d) for d in DEFAULT_DILATIONS))


@dataclass
class PacModuleConfig:
    c_in: int
    c_out: int
    c_mid: int | None = None        # defaults to c_out
    branches: tuple[PacBranchConfig, ...] = field(default_factory=default_branches)
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        if self.c_mid is None:
            self.c_mid = self.c_out
        if self.c_in < 1 or self.c_out < 1 or self.c_mid < 1:
            raise ValueError("channel counts must be >= 1")
        self.branches = tuple(self.branches)
        if not self.branches:
            raise ValueError("module needs at least one branch")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")


@dataclass
class PacModuleParams:
    branch_params: list[ConvParams]
    fusion: ConvParams


def init_params(config: PacModuleConfig, dtype=np.float64) -> PacModuleParams:
    """Seeded uniform parameter initialization.

    A single SplitMix64 stream seeded with ``config.seed`` supplies every
    weight, in a fixed order: each branch's 3x3 kernel (row-major) in branch
    order, then the 1x1 fusion kernel. Weights are uniform in [-b, b) with
    b = sqrt(6 / fan_in); biases are zero. The stream is integer-exact, so
    equal seeds give bitwise-equal parameters on any platform.
    """
    rng = SplitMix64(config.seed)
    bound = math.sqrt(6.0 / (config.c_in * 9))
    branch_params = []
    for _ in config.branches:
        wt = rng.uniform(-bound, bound, (config.c_mid, config.c_in, 3, 3)).astype(dtype)
        branch_params.append(ConvParams(wt, np.zeros(config.c_mid, dtype=dtype)))
    cat_channels = len(config.branches) * config.c_mid
    fusion_bound = math.sqrt(6.0 / cat_channels)
    fw = rng.uniform(-fusion_bound, fusion_bound,
                     (config.c_out, cat_channels, 1, 1)).astype(dtype)
    fusion = ConvParams(fw, np.zeros(config.c_out, dtype=dtype))
    return PacModuleParams(branch_params, fusion)


def _activate(x: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(x, 0) if kind == "relu" else x


def _check_module_args(x, params, config, angles):
    if x.ndim != 4:
        raise ShapeMismatch(f"input must be NCHW, got shape {x.shape}")
    if x.shape[1] != config.c_in:
        raise ShapeMismatch(f"input has {x.shape[1]} channels, config expects {config.c_in}")
    if (angles.height, angles.width) != (x.shape[2], x.shape[3]):
        raise ShapeMismatch(
            f"angle field {angles.height}x{angles.width} vs input {x.shape[2]}x{x.shape[3]}")
    if len(params.branch_params) != len(config.branches):
        raise ShapeMismatch(
            f"{len(params.branch_params)} branch params for {len(config.branches)} branches")


def _branch_offsets(config: PacModuleConfig, angles: AngleField) -> dict:
    cache = {}
    for br in config.branches:
        if br.kind == "perspective" and br.dilation not in cache:
            cache[br.dilation] = build_offset_field(angles, KernelSpec(3, 3, br.dilation))
    return cache


def pac_module_forward(x: np.ndarray, params: PacModuleParams, config: PacModuleConfig,
                       angles: AngleField, impl: str = "gather",
                       threads: int = 1) -> np.ndarray:
    """Run every branch, concatenate in config order, fuse with the 1x1 conv.

    The per-branch activation and the final activation both follow
    ``config.activation``. Output is [n, c_out, h, w], same spatial size as
    the input.
    """
    _check_module_args(x, params, config, angles)
    offs = _branch_offsets(config, angles)
    outs = []
    for br, p in zip(config.branches, params.branch_params):
        if br.kind == "standard":
            y = standard_conv_forward(x, p, br.dilation)
        else:
            y = pac_conv_forward(x, p, offs[br.dilation], impl=impl, threads=threads)
        outs.append(_activate(y, config.activation))
    cat = np.concatenate(outs, axis=1)
    fused = standard_conv_forward(cat, params.fusion, 1)
    return _activate(fused, config.activation)


def pac_module_backward(x: np.ndarray, params: PacModuleParams, config: PacModuleConfig,
                        angles: AngleField, grad_output: np.ndarray):
    """Adjoint of pac_module_forward.

    Recomputes the forward intermediates, then pushes the cotangent back
    through the final activation, the fusion conv, the channel split, each
    branch activation, and each branch conv. ReLU uses subgradient 0 at
    exactly 0. Returns (grad_input, PacModuleParams of gradients).
    """
    _check_module_args(x, params, config, angles)
    offs = _branch_offsets(config, angles)

    branch_pre = []
    for br, p in zip(config.branches, params.branch_params):
        if br.kind == "standard":
            branch_pre.append(standard_conv_forward(x, p, br.dilation))
        else:
            branch_pre.append(pac_conv_forward(x, p, offs[br.dilation]))
    cat = np.concatenate([_activate(y, config.activation) for y in branch_pre], axis=1)
    fused_pre = standard_conv_forward(cat, params.fusion, 1)

    if grad_output.shape != fused_pre.shape:
        raise ShapeMismatch(
            f"grad_output shaped {grad_output.shape}, expected {fused_pre.shape}")
    g = grad_output * (fused_pre > 0) if config.activation == "relu" else grad_output
    g_cat, g_fw, g_fb = standard_conv_backward(cat, params.fusion, g, 1)

    grad_x = np.zeros_like(x)
    branch_grads = []
    c_mid = config.c_mid
    for i, (br, p) in enumerate(zip(config.branches, params.branch_params)):
        g_b = g_cat[:, i * c_mid:(i + 1) * c_mid]
        if config.activation == "relu":
            g_b = g_b * (branch_pre[i] > 0)
        if br.kind == "standard":
            gx, gw, gb = standard_conv_backward(x, p, g_b, br.dilation)
        else:
            gx, gw, gb = pac_conv_backward(x, p, offs[br.dilation], g_b)
        grad_x += gx
        branch_grads.append(ConvParams(gw, gb))
    return grad_x, PacModuleParams(branch_grads, ConvParams(g_fw, g_fb))


def save_module_params(dirpath, config: PacModuleConfig, params: PacModuleParams) -> None:
    """Write params as a directory of PACT tensors plus a branch manifest.

    The manifest lists one branch per line as "<kind> <dilation>", in order.
    """
    os.makedirs(dirpath, exist_ok=True)
    lines = [f"{br.kind} {br.dilation}" for br in config.branches]
    with open(os.path.join(dirpath, MANIFEST_NAME), "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    for i, p in enumerate(params.branch_params):
        write_pact(p.weights, os.path.join(dirpath, f"branch{i}.weight.pact"))
        write_pact(p.bias, os.path.join(dirpath, f"branch{i}.bias.pact"))
    write_pact(params.fusion.weights, os.path.join(dirpath, "fusion.weight.pact"))
    write_pact(params.fusion.bias, os.path.join(dirpath, "fusion.bias.pact"))


def load_module_params(dirpath):
    """Read a params directory; returns (branches, PacModuleParams)."""
    with open(os.path.join(dirpath, MANIFEST_NAME), encoding="ascii") as fh:
        lines = [ln.split() for ln in fh.read().splitlines() if ln.strip()]
    branches = tuple(PacBranchConfig(kind, int(dil)) for kind, dil in lines)
    branch_params = []
    for i in range(len(branches)):
        wt = read_pact(os.path.join(dirpath, f"branch{i}.weight.pact"))
        bias = read_pact(os.path.join(dirpath, f"branch{i}.bias.pact"))
        branch_params.append(ConvParams(wt, bias))
    fusion = ConvParams(read_pact(os.path.join(dirpath, "fusion.weight.pact")),
                        read_pact(os.path.join(dirpath, "fusion.bias.pact")))
    return branches, PacModuleParams(branch_params, fusion)
