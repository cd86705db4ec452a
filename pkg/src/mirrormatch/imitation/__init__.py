"""Online player model: adaptive random forest of Hoeffding trees with
per-member drift detection, trained one example per frame."""

from .adwin import AdwinDetector
from .tree import HoeffdingTree, SplitNode, LeafNode, hoeffding_bound
from .forest import (
    ForestConfig,
    ForestModel,
    LabeledExample,
    forest_new,
    imitation_snapshot,
    learn_one,
    load_forest,
    predict_one,
    prequential_accuracy,
    save_forest,
)

__all__ = [
    "AdwinDetector",
    "HoeffdingTree",
    "SplitNode",
    "LeafNode",
    "hoeffding_bound",
    "ForestConfig",
    "ForestModel",
    "LabeledExample",
    "forest_new",
    "imitation_snapshot",
    "learn_one",
    "load_forest",
    "predict_one",
    "prequential_accuracy",
    "save_forest",
]
