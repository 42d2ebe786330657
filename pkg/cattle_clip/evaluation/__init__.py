from cattle_clip.evaluation.metrics import (
    RANDOM_CHANCE_THRESHOLD,
    MetricsReport,
    build_report,
    confusion_matrix,
    flag_suboptimal,
    overall_accuracy,
    precision_recall,
)
from cattle_clip.evaluation.report import (
    confusion_frame,
    format_pair,
    format_percent,
    read_report,
    render_comparison_table,
    write_report,
)

__all__ = [
    "RANDOM_CHANCE_THRESHOLD",
    "MetricsReport",
    "build_report",
    "confusion_matrix",
    "flag_suboptimal",
    "overall_accuracy",
    "precision_recall",
    "confusion_frame",
    "format_pair",
    "format_percent",
    "read_report",
    "render_comparison_table",
    "write_report",
]
