from .data import CsvFormatError, Dataset, load_csv
from .estimator import MlpClassifier, MlpRegressor
from .metrics import EmptyMatrix, LabelOutOfRange, confusion_matrix, metrics
from .network import (
    BadArchitecture,
    MlpModel,
    NonFiniteInput,
    ShapeMismatch,
    TrainConfig,
    forward,
    grad,
    grad_check,
    init_mlp,
    loss,
    predict,
    softmax,
    train,
)

__all__ = [
    "BadArchitecture",
    "CsvFormatError",
    "Dataset",
    "EmptyMatrix",
    "LabelOutOfRange",
    "MlpClassifier",
    "MlpModel",
    "MlpRegressor",
    "NonFiniteInput",
    "ShapeMismatch",
    "TrainConfig",
    "confusion_matrix",
    "forward",
    "grad",
    "grad_check",
    "init_mlp",
    "load_csv",
    "loss",
    "metrics",
    "predict",
    "softmax",
    "train",
]
