"""Multi-generator GAN anomaly detector with a stepwise generator gate."""

from ._stepgan import (
    Architecture,
    ConfigError,
    DataError,
    Error,
    GanModel,
    NumericError,
    ShapeError,
    StateError,
    TrainConfig,
    convergence_epoch,
    evaluate,
    evaluate_checkpoint,
    load_csv,
    load_model,
    metrics,
    mode_coverage,
    pca_project,
    resolve_config,
    run_training,
    synth,
    train,
)

__all__ = [
    "Architecture",
    "ConfigError",
    "DataError",
    "Error",
    "GanModel",
    "NumericError",
    "ShapeError",
    "StateError",
    "TrainConfig",
    "convergence_epoch",
    "evaluate",
    "evaluate_checkpoint",
    "load_csv",
    "load_model",
    "metrics",
    "mode_coverage",
    "pca_project",
    "resolve_config",
    "run_training",
    "synth",
    "train",
]
