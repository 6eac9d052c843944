"""Differentiable time warping and warping-network experiments."""

from _warpnet import (
    ConfigError,
    DomainError,
    ParseError,
    ShapeError,
    affine_warp,
    compose,
    constraint_backward,
    constraint_forward,
    generate_dataset,
    gradient_checks,
    identity_warp,
    invert,
    is_valid_warp,
    mean_warp,
    random_warp,
    resample_backward,
    run_experiment,
    warp_derivative,
    warp_from_derivative,
    warp_sequence,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "ParseError",
    "ShapeError",
    "affine_warp",
    "compose",
    "constraint_backward",
    "constraint_forward",
    "generate_dataset",
    "gradient_checks",
    "identity_warp",
    "invert",
    "is_valid_warp",
    "mean_warp",
    "random_warp",
    "resample_backward",
    "run_experiment",
    "warp_derivative",
    "warp_from_derivative",
    "warp_sequence",
]
