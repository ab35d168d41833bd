"""Learning and decoupling the antenna radiation patterns of a UAV pair."""

from .geometry import (Direction, FullPose, JointObservation, Observations, ReducedPose, Vec3,
                       angular_distance, direction_of, joint_observation, path_loss_db,
                       relative_in_frame)
from .learning import (DecoupledModel, MatchedSample, TrainingSet, build_design_matrix, fit,
                       gain_a, gain_b, predict_rx, residual_targets, ridge_fit)
from .models import (GridKernel, PatternFunction, Polynomial, SphericalHarmonics, basis_dimension,
                     eval_pattern, parse_spec)

__version__ = "0.1.0"

__all__ = [
    "Direction", "FullPose", "JointObservation", "Observations", "ReducedPose", "Vec3",
    "angular_distance", "direction_of", "joint_observation", "path_loss_db", "relative_in_frame",
    "DecoupledModel", "MatchedSample", "TrainingSet", "build_design_matrix", "fit", "gain_a",
    "gain_b", "predict_rx", "residual_targets", "ridge_fit",
    "GridKernel", "PatternFunction", "Polynomial", "SphericalHarmonics", "basis_dimension",
    "eval_pattern", "parse_spec",
]
