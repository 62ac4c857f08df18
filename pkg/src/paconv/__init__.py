"""Perspective-aware convolution.

A pinhole camera maps the depth direction at each ground pixel to a 2-d
image direction. Skewing one axis of a convolution kernel onto that
direction aligns the receptive field with the scene's perspective
foreshortening. This package provides the camera geometry, the per-pixel
angle and offset fields, the bilinear-sampled convolution with its exact
adjoint, a multi-branch module that fuses several dilation rates, and
small binary formats for moving tensors and calibrations around.
"""

from .errors import (BadMagic, DepthNotPositive, HorizonSingularity,
                     InvalidDimensions, MalformedNumber, MissingP2,
                     NonFiniteInput, NonPositiveFocal, PacError,
                     ShapeMismatch, TruncatedPayload, UnknownDtype,
                     UnsupportedVersion)
from .geometry import (ABOVE_HORIZON_MODES, AngleField, CameraIntrinsics,
                       CameraPoint, DepthGradient, FALLBACK_ANGLE,
                       GroundPlane, PixelCoord, angle_field,
                       backproject_ground, depth_derivative,
                       perspective_angle, project)
from .offsets import (KernelSpec, OffsetField, build_offset_field,
                      kernel_offsets, tap_indices)
from .conv import (ConvParams, FORWARD_IMPLS, bilinear_sample,
                   pac_conv_backward, pac_conv_forward,
                   standard_conv_backward, standard_conv_forward)
from .module import (DEFAULT_DILATIONS, PacBranchConfig, PacModuleConfig,
                     PacModuleParams, default_branches, init_params,
                     load_module_params, pac_module_backward,
                     pac_module_forward, save_module_params)
from .io_formats import (parse_kitti_calib, read_pact, write_angle_ppm,
                         write_pact)
from .rng import SplitMix64
from .gradcheck import (GradReport, check_conv_gradients,
                        check_module_gradients, numeric_gradient,
                        run_all_checks)
from .bench import BenchReport, make_problem, run_bench

__version__ = "0.1.0"

__all__ = [
    "ABOVE_HORIZON_MODES", "AngleField", "BadMagic", "BenchReport",
    "CameraIntrinsics", "CameraPoint", "ConvParams", "DEFAULT_DILATIONS",
    "DepthGradient", "DepthNotPositive", "FALLBACK_ANGLE", "FORWARD_IMPLS",
    "GradReport", "GroundPlane", "HorizonSingularity", "InvalidDimensions",
    "KernelSpec", "MalformedNumber", "MissingP2", "NonFiniteInput",
    "NonPositiveFocal", "OffsetField", "PacBranchConfig", "PacError",
    "PacModuleConfig", "PacModuleParams", "PixelCoord", "ShapeMismatch",
    "SplitMix64", "TruncatedPayload", "UnknownDtype", "UnsupportedVersion",
    "angle_field", "backproject_ground", "bilinear_sample",
    "build_offset_field", "check_conv_gradients", "check_module_gradients",
    "default_branches", "depth_derivative", "init_params", "kernel_offsets",
    "load_module_params", "make_problem", "numeric_gradient",
    "pac_conv_backward", "pac_conv_forward", "pac_module_backward",
    "pac_module_forward", "parse_kitti_calib", "perspective_angle",
    "project", "read_pact", "run_all_checks", "run_bench",
    "save_module_params", "standard_conv_backward", "standard_conv_forward",
    "tap_indices", "write_angle_ppm", "write_pact",
]
