"""Python access to the glrc core: teacher propagation, the MLP student,
distillation losses, evaluation and the train/evaluate commands."""

import json as _json

from ._glrc import (
    ConfigError,
    ContractViolation,
    DataError,
    DegenerateVector,
    GlrcError,
    InvalidInput,
    InvalidShape,
    NumericError,
    blocks_dataset,
    distill,
    make_synthetic,
    mad,
    normalized_adjacency,
    omega_weights,
    pred_kd,
    rank_metrics,
    read_checkpoint,
    student_forward,
    teacher_readout,
    train_teacher,
)
from ._glrc import evaluate_json as _evaluate_json


def evaluate(model, data, n=20, mad=False, split="test"):
    """Metric report of a checkpoint as a dict (keys recall<N>, ndcg<N>, ...)."""
    return _json.loads(_evaluate_json(model, data, n, mad, split))


__all__ = [name for name in dir() if not name.startswith("_")]
