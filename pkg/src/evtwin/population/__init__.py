from .synthesis import (
    CalibrationError,
    SynthesisConfig,
    SynthesisConfigError,
    apportion,
    assign_vehicles,
    calibrate_flats,
    estimate_flats,
    largest_remainder,
    sample_households,
)
from .tree import (
    BuildingTypeClassifier,
    DecisionTree,
    LabeledBuildingExample,
    TrainingError,
    classify_building,
    rule_based_type,
    train_tree,
)

__all__ = [
    "BuildingTypeClassifier", "CalibrationError", "DecisionTree", "LabeledBuildingExample",
    "SynthesisConfig", "SynthesisConfigError", "TrainingError", "apportion", "assign_vehicles",
    "calibrate_flats", "classify_building", "estimate_flats", "largest_remainder",
    "rule_based_type", "sample_households", "train_tree",
]
