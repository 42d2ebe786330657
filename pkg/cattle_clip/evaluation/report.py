"""Report serialisation and the aligned text tables."""

import hashlib
import json
import logging
import os
from typing import Any, Dict, Mapping, Optional

import numpy as np
import pandas as pd

from cattle_clip.errors import DataError
from cattle_clip.evaluation.metrics import MetricsReport
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger(__name__)


def format_percent(value: float) -> str:
    """0.961 -> '96.1%'"""
    return f"{value * 100:.1f}%"


def format_pair(precision: Optional[float], recall: Optional[float]) -> str:
    """Precision/recall as '0.97/1.00'; undefined values print as '-'"""
    render = lambda v: "-" if v is None else f"{v:.2f}"
    return f"{render(precision)}/{render(recall)}"


def config_digest(config: Mapping[str, Any]) -> str:
    payload = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


def report_to_dict(report: MetricsReport) -> Dict[str, Any]:
    return {
        "category_order": list(report.category_order),
        "confusion": np.asarray(report.confusion).tolist(),
        "overall_accuracy": report.overall_accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "support": report.support,
        "suboptimal_flag": report.suboptimal_flag,
        "threshold": report.threshold,
        "provenance": report.provenance,
        "display": {
            "overall_accuracy": format_percent(report.overall_accuracy),
            "per_category": {
                c: format_pair(p, r) for c, p, r in zip(report.category_order, report.precision, report.recall)
            },
        },
    }


def report_from_dict(data: Mapping[str, Any]) -> MetricsReport:
    try:
        return MetricsReport(
            confusion=np.asarray(data["confusion"], dtype=np.int64),
            category_order=tuple(data["category_order"]),
            overall_accuracy=float(data["overall_accuracy"]),
            precision=list(data["precision"]),
            recall=list(data["recall"]),
            support=[int(s) for s in data["support"]],
            suboptimal_flag=bool(data["suboptimal_flag"]),
            threshold=float(data["threshold"]),
            provenance=dict(data.get("provenance", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed metrics report: {exc}") from exc


async def write_report(report: MetricsReport, path: str, provenance: Optional[Mapping[str, Any]] = None) -> str:
    """
    Write the report as JSON.

    Args:
        report: Metrics to write
        path: Target file
        provenance: Extra fields (checkpoint id, dataset hash, config hash, split, ...)
    """
    if provenance:
        report.provenance.update(provenance)
    text = json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    target = await FileManager("", os.path.dirname(path) or ".").write_text(os.path.basename(path), text)
    logger.info("Wrote report to %s (accuracy %s)", target, format_percent(report.overall_accuracy))
    return target


def read_report(path: str) -> MetricsReport:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Report {path} not found")
    with open(path, "r", encoding="utf-8") as f:
        try:
            return report_from_dict(json.load(f))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: malformed JSON ({exc.msg})") from exc


def confusion_frame(report: MetricsReport) -> pd.DataFrame:
    """Confusion matrix with per-category recall column and precision row"""
    frame = pd.DataFrame(
        np.asarray(report.confusion),
        index=pd.Index(report.category_order, name="true"),
        columns=list(report.category_order),
    )
    frame["recall"] = ["-" if r is None else f"{r:.2f}" for r in report.recall]
    frame.loc["precision"] = ["-" if p is None else f"{p:.2f}" for p in report.precision] + [
        format_percent(report.overall_accuracy)
    ]
    return frame


def render_comparison_table(rows: Mapping[str, float], value_name: str = "Accuracy (%)") -> str:
    """Aligned text table of model name -> accuracy, one decimal, like the ablation table"""
    frame = pd.DataFrame(
        {"Models": list(rows), value_name: [f"{v * 100:.1f}" for v in rows.values()]}
    )
    return frame.to_string(index=False)
