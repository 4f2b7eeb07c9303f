"""The training objective, optimizer, model and loop.

"""

from .spec import TrainConfig, VARIANTS
from .losses import depth_pearson_loss, total_loss, LossParts, VARIANCE_FLOOR
from .optim import OptimizerState, adam_step, ParamGroup, Adam
from .model import WildGaussianModel, ContextResult
from .trainer import HistoryRow, Trainer, train, CLOUD_GROUPS


__all__ = [
    "TrainConfig",
    "VARIANTS",
    "depth_pearson_loss",
    "total_loss",
    "LossParts",
    "VARIANCE_FLOOR",
    "OptimizerState",
    "adam_step",
    "ParamGroup",
    "Adam",
    "WildGaussianModel",
    "ContextResult",
    "HistoryRow",
    "Trainer",
    "train",
    "CLOUD_GROUPS",
]
