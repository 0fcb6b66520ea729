"""Fixation-sequence metadata extraction and saliency evaluation toolkit.

Thin Python facade over the C++ core. Saliency maps are float64 (H, W)
numpy arrays, fixation maps are uint8 (H, W) arrays, and fixation points
are (N, 2) integer arrays in (x, y) order.
"""

from salseq._core import (
    Dataset,
    GmmModel,
    MetaStack,
    ObserverScanpath,
    ParseError,
    StimulusRecord,
    ValidationError,
    aggregate_map,
    at_least_histogram,
    auc_borji,
    auc_judd,
    blur_fixations,
    blur_sigma,
    cc,
    center_prior,
    choose_timesteps,
    dataset_from_json,
    dataset_to_json,
    elbow,
    fit_gaussian_histogram,
    fit_gmm,
    hard_assign,
    info_gain,
    kl,
    l_aux,
    l_sal,
    load_dataset,
    nss,
    normalize_range,
    normalize_sum,
    sauc,
    save_dataset,
    sim,
    spatial_maps,
    stack_union,
    temporal_maps,
    to_incremental,
    train_toy,
    validate_stack,
    wss_curve,
    zscore,
)

__all__ = [
    "Dataset",
    "GmmModel",
    "MetaStack",
    "ObserverScanpath",
    "ParseError",
    "StimulusRecord",
    "ValidationError",
    "aggregate_map",
    "at_least_histogram",
    "auc_borji",
    "auc_judd",
    "blur_fixations",
    "blur_sigma",
    "cc",
    "center_prior",
    "choose_timesteps",
    "dataset_from_json",
    "dataset_to_json",
    "elbow",
    "fit_gaussian_histogram",
    "fit_gmm",
    "hard_assign",
    "info_gain",
    "kl",
    "l_aux",
    "l_sal",
    "load_dataset",
    "nss",
    "normalize_range",
    "normalize_sum",
    "sauc",
    "save_dataset",
    "sim",
    "spatial_maps",
    "stack_union",
    "temporal_maps",
    "to_incremental",
    "train_toy",
    "validate_stack",
    "wss_curve",
    "zscore",
]

__version__ = "0.1.0"
