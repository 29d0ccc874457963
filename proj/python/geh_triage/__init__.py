"""GEH feature extraction and boosted-tree triage models."""

from ._core import (
    GehError,
    average_precision,
    chi_square_2x2,
    choose_threshold,
    compute_geh,
    extract,
    f2,
    fit,
    kors_transform,
    mann_whitney,
    predict,
    roc_auc,
    spatial_angle,
    synth,
    table_one,
    train_eval,
    version,
)

__all__ = [
    "GehError",
    "average_precision",
    "chi_square_2x2",
    "choose_threshold",
    "compute_geh",
    "extract",
    "f2",
    "fit",
    "kors_transform",
    "mann_whitney",
    "predict",
    "roc_auc",
    "spatial_angle",
    "synth",
    "table_one",
    "train_eval",
    "version",
]
__version__ = version()
