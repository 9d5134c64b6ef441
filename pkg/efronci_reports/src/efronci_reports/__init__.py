"""Figure rendering for interval-experiment CSV tables."""

from .figures import (
    FIGURES,
    REQUIRED_COLUMNS,
    ReportsError,
    apply_filters,
    disk_profile,
    load_results,
    rate_fit,
    render_figure,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FIGURES",
    "REQUIRED_COLUMNS",
    "ReportsError",
    "apply_filters",
    "disk_profile",
    "load_results",
    "rate_fit",
    "render_figure",
]
