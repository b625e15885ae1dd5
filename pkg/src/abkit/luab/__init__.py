"""Point-supervised multi-task training at desk scale."""

from .evaluate import RobustnessReport, evaluate_robustness, v_metrics
from .losses import LossParts, luab_loss, smooth_l1
from .nn import ModelSpec, PointRegressionNet, SGD, attentive_pool_forward
from .scenes import SceneArrays, SceneConfig, SceneData, generate_scene, make_dataset
from .train import TrainConfig, TrainResult, localization_accuracy, train

__all__ = [
    "LossParts",
    "ModelSpec",
    "PointRegressionNet",
    "RobustnessReport",
    "SGD",
    "SceneArrays",
    "SceneConfig",
    "SceneData",
    "TrainConfig",
    "TrainResult",
    "attentive_pool_forward",
    "evaluate_robustness",
    "generate_scene",
    "localization_accuracy",
    "luab_loss",
    "make_dataset",
    "smooth_l1",
    "train",
    "v_metrics",
]
