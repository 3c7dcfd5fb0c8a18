"""Experiment pipelines built on the solvers."""

from .color import (ColorHistogram, barycentric_projection, color_cost, color_instance,
                    color_transfer, image_pixels, kmeans_quantize, nearest_centroid,
                    normalize_pair, read_ppm, recolor_image, write_ppm)
from .compare import (ScalingResult, TunedComparison, bench_scaling, fit_slope,
                      iterations_to_target, tuned_comparison)
from .registration import (RegistrationConfig, RegistrationResult, RegistrationStep,
                           RigidTransform, fit_rigid, read_xyz, register_point_clouds,
                           registration_instance, rotation_angle_deg, write_xyz)
from .synthetic import overlapping_clouds, random_instance, scaling_instance, smooth_image

__all__ = [
    "ColorHistogram", "barycentric_projection", "color_cost", "color_instance",
    "color_transfer", "image_pixels", "kmeans_quantize", "nearest_centroid", "normalize_pair",
    "read_ppm", "recolor_image", "write_ppm", "ScalingResult", "TunedComparison", "bench_scaling", "fit_slope",
    "iterations_to_target", "tuned_comparison", "RegistrationConfig", "RegistrationResult",
    "RegistrationStep", "RigidTransform", "fit_rigid", "read_xyz", "register_point_clouds",
    "registration_instance", "rotation_angle_deg", "write_xyz", "overlapping_clouds",
    "random_instance", "scaling_instance", "smooth_image",
]
