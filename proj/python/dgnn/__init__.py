"""Graph classification under symmetric label noise with loss correction."""

from dgnn._core import (
    ConfigError,
    CorrectionMatrix,
    Dataset,
    FormatError,
    IngestError,
    Model,
    NoiseMatrix,
    ShapeError,
    SingularMatrixError,
    UsageError,
    __version__,
    backward_loss,
    build_noise_matrix,
    cross_entropy_vector,
    entrywise_l1_distance,
    estimate_anchor,
    estimate_conservative,
    estimate_exact,
    evaluate,
    identity_correction,
    inject_noise,
    invert_correction,
    kfold_split,
    load_dataset,
    run_experiment,
    train_gin,
)

__all__ = [
    "ConfigError",
    "CorrectionMatrix",
    "Dataset",
    "FormatError",
    "IngestError",
    "Model",
    "NoiseMatrix",
    "ShapeError",
    "SingularMatrixError",
    "UsageError",
    "__version__",
    "backward_loss",
    "build_noise_matrix",
    "cross_entropy_vector",
    "entrywise_l1_distance",
    "estimate_anchor",
    "estimate_conservative",
    "estimate_exact",
    "evaluate",
    "identity_correction",
    "inject_noise",
    "invert_correction",
    "kfold_split",
    "load_dataset",
    "run_experiment",
    "train_gin",
]
