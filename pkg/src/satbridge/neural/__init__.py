from .checkpoint import Checkpoint, CheckpointError
from .config import TrainConfig
from .gradcheck import check_linear, grad_check
from .model import (NumericError, clause_aggregate, forward, frozen_names, init_embeddings,
                    init_params, predict_proba, variable_aggregate)
from .optim import AdamState, adam_step

__all__ = [
    "Checkpoint", "CheckpointError", "TrainConfig", "check_linear", "grad_check",
    "NumericError", "clause_aggregate", "forward", "frozen_names", "init_embeddings",
    "init_params", "predict_proba", "variable_aggregate", "AdamState", "adam_step",
]
