from .bleu import bleu4
from .decoding import generate_caption
from .model import DecodeState, ModelDims, MultiLingualModel, mean_pool_variant
from .training import (
    EpochStat,
    TrainingConfig,
    TrainingLog,
    interleave,
    split_by_scene,
    train,
)

__all__ = [
    "DecodeState",
    "EpochStat",
    "ModelDims",
    "MultiLingualModel",
    "TrainingConfig",
    "TrainingLog",
    "bleu4",
    "generate_caption",
    "interleave",
    "mean_pool_variant",
    "split_by_scene",
    "train",
]
