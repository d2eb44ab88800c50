"""Cold-to-warm interaction threshold estimation for recommenders."""

from ._coldwarm import (
    ConfigError,
    DataError,
    Model,
    RunFailure,
    confidence_interval,
    dataset_stats,
    detect_threshold,
    pcore_size,
    run_detect,
    run_scan_items,
    run_scan_users,
    run_split,
    run_stats,
    run_tune,
    split_summary,
    window_slopes,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Model",
    "RunFailure",
    "confidence_interval",
    "dataset_stats",
    "detect_threshold",
    "pcore_size",
    "run_detect",
    "run_scan_items",
    "run_scan_users",
    "run_split",
    "run_stats",
    "run_tune",
    "split_summary",
    "window_slopes",
]
