from .losses import composite_loss, reconstruction_mse, recon_weight, smoothed_weighted_ce
from .loop import (
    HISTORY_COLUMNS,
    EarlyStopState,
    TrainConfig,
    TrainResult,
    format_history,
    model_blocks,
    predict,
    train_loop,
    write_history,
)
from .metrics import MetricsReport, binary_auc, cohens_kappa, compute_metrics, matthews_corrcoef
from .optim import AdamState, adam_step, adamw_step, clip_gradients, global_norm, lr_at

__all__ = [
    "AdamState", "EarlyStopState", "HISTORY_COLUMNS", "MetricsReport", "TrainConfig",
    "TrainResult", "adam_step", "adamw_step", "binary_auc", "clip_gradients", "cohens_kappa",
    "composite_loss", "compute_metrics", "format_history", "global_norm", "lr_at",
    "matthews_corrcoef", "model_blocks", "predict", "recon_weight", "reconstruction_mse",
    "smoothed_weighted_ce", "train_loop", "write_history",
]
