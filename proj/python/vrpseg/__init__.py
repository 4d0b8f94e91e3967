"""Visual-reference prompt segmentation toolkit."""

from ._vrpseg import (
    VrpsegError,
    binarize,
    evaluate,
    fold_spec,
    iou,
    mask_avg_pool,
    min_max_normalize,
    pseudo_mask,
    reference_config,
    run_cli,
    simulate_annotation,
    version,
)

__all__ = [
    "VrpsegError",
    "binarize",
    "evaluate",
    "fold_spec",
    "iou",
    "mask_avg_pool",
    "min_max_normalize",
    "pseudo_mask",
    "reference_config",
    "run_cli",
    "simulate_annotation",
    "version",
]

__version__ = version()
