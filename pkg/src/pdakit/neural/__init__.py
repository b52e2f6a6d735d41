from .net import (
    Episode,
    FeasibilityTracker,
    colors_to_pointers,
    decode_step,
    embed_edge,
    encode,
    gru_step,
    pointer_to_colors,
    reinforce_objective_and_grad,
    reinforce_update,
    rollout,
    supervised_loss,
)
from .params import (
    GruParams,
    ModelConfig,
    ModelParams,
    clip_grads,
    load_checkpoint,
    save_checkpoint,
)
from .train import LogRow, TrainConfig, greedy_valid_rate, train, write_log_csv

__all__ = [
    "Episode",
    "FeasibilityTracker",
    "GruParams",
    "LogRow",
    "ModelConfig",
    "ModelParams",
    "TrainConfig",
    "clip_grads",
    "colors_to_pointers",
    "decode_step",
    "embed_edge",
    "encode",
    "greedy_valid_rate",
    "gru_step",
    "load_checkpoint",
    "pointer_to_colors",
    "reinforce_objective_and_grad",
    "reinforce_update",
    "rollout",
    "save_checkpoint",
    "supervised_loss",
    "train",
    "write_log_csv",
]
