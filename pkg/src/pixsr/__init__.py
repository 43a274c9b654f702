"""pixsr: guided upsampling of low-resolution maps.

A low-resolution source map is upsampled by fitting, per image, a small
two-branch network that maps each high-resolution guide pixel (intensities
plus normalized coordinates) to a target value, constrained so that block
averages of the output reproduce the source.
"""

from .baselines import bicubic_upsample, guided_filter, guided_filter_upsample
from .estimators import BicubicUpsampler, GuidedFilterUpsampler, GuidedUpsampler
from .fileio import read_image, read_pfm, write_image, write_pfm, write_png
from .gradcheck import GradCheckReport, check_gradients
from .imaging import (
    NormStats,
    block_downsample,
    compute_norm_stats,
    coordinate_channels,
    denormalize,
    normalize,
)
from .metrics import EvalReport, aggregate, evaluate, mae, mse, pbp
from .network import (
    ModelConfig,
    MlpParams,
    init_model,
    load_params,
    predict_image,
    predict_pixel,
    save_params,
    weight_penalty,
)
from .solver import (
    FitResult,
    TrainConfig,
    TrainingDivergedError,
    fit,
    objective,
    upsample,
)
from .synth import SceneSpec, generate, make_source

__version__ = "0.1.0"

__all__ = [
    "BicubicUpsampler",
    "EvalReport",
    "FitResult",
    "GradCheckReport",
    "GuidedFilterUpsampler",
    "GuidedUpsampler",
    "MlpParams",
    "ModelConfig",
    "NormStats",
    "SceneSpec",
    "TrainConfig",
    "TrainingDivergedError",
    "aggregate",
    "bicubic_upsample",
    "block_downsample",
    "check_gradients",
    "compute_norm_stats",
    "coordinate_channels",
    "denormalize",
    "evaluate",
    "fit",
    "generate",
    "guided_filter",
    "guided_filter_upsample",
    "init_model",
    "load_params",
    "mae",
    "make_source",
    "mse",
    "normalize",
    "objective",
    "pbp",
    "predict_image",
    "predict_pixel",
    "read_image",
    "read_pfm",
    "save_params",
    "upsample",
    "weight_penalty",
    "write_image",
    "write_pfm",
    "write_png",
]
