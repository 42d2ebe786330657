import json
import os

import numpy as np
import pytest

from cattle_clip.errors import DataError
from cattle_clip.evaluation import (
    MetricsReport,
    build_report,
    confusion_frame,
    confusion_matrix,
    flag_suboptimal,
    format_pair,
    format_percent,
    overall_accuracy,
    precision_recall,
    read_report,
    render_comparison_table,
    write_report,
)


def test_confusion_matrix_counts():
    confusion = confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1], 2)
    assert confusion.tolist() == [[1, 1], [0, 2]]


def test_precision_recall_on_two_by_two():
    precision, recall = precision_recall(np.array([[1, 1], [0, 2]]))
    assert recall == [0.5, 1.0]
    assert precision[0] == 1.0
    assert precision[1] == pytest.approx(2 / 3)


def test_empty_input_gives_zero_matrix():
    confusion = confusion_matrix([], [], 6)
    assert confusion.shape == (6, 6)
    assert confusion.sum() == 0
    with pytest.raises(DataError):
        overall_accuracy(confusion)


def test_confusion_matrix_rejects_bad_labels():
    with pytest.raises(DataError):
        confusion_matrix([0, 1], [0], 2)
    with pytest.raises(DataError):
        confusion_matrix([0, 2], [0, 1], 2)


def test_zero_denominator_is_a_null_sentinel():
    precision, recall = precision_recall(np.array([[2, 0], [0, 0]]))
    assert precision == [1.0, None]
    assert recall == [1.0, None]


def test_metrics_match_brute_force_counts():
    rng = np.random.default_rng(0)
    for _ in range(100):
        C = int(rng.integers(2, 7))
        n = int(rng.integers(1, 40))
        true = rng.integers(0, C, size=n)
        predicted = rng.integers(0, C, size=n)
        report = build_report(true, predicted, [f"c{i}" for i in range(C)])
        assert report.overall_accuracy == sum(t == p for t, p in zip(true, predicted)) / n
        for c in range(C):
            hits = sum(1 for t, p in zip(true, predicted) if t == c and p == c)
            support = sum(1 for t in true if t == c)
            guessed = sum(1 for p in predicted if p == c)
            assert report.recall[c] == (hits / support if support else None)
            assert report.precision[c] == (hits / guessed if guessed else None)


def _report(precision, recall, support):
    C = len(precision)
    return MetricsReport(
        confusion=np.eye(C, dtype=np.int64),
        category_order=tuple(f"c{i}" for i in range(C)),
        overall_accuracy=1.0,
        precision=precision,
        recall=recall,
        support=support,
    )


def test_flag_suboptimal_boundary():
    assert flag_suboptimal(_report([0.17, 0.9], [0.9, 0.9], [5, 5]))
    assert not flag_suboptimal(_report([0.171, 0.9], [0.9, 0.9], [5, 5]))
    assert flag_suboptimal(_report([0.9, 0.9], [0.9, 0.0], [5, 5]))


def test_flag_skips_unsupported_categories():
    assert not flag_suboptimal(_report([0.9, None], [0.9, None], [5, 0]))
    assert not flag_suboptimal(_report([0.9, 0.0], [0.9, None], [5, 0]))


def test_display_formatting():
    assert format_percent(0.961) == "96.1%"
    assert format_pair(0.97, 1.0) == "0.97/1.00"
    assert format_pair(None, 0.5) == "-/0.50"


@pytest.mark.asyncio
async def test_report_is_written_and_read_back(temp_dirs):
    _, output_dir = temp_dirs
    path = os.path.join(output_dir, "report.json")
    report = build_report([0, 0, 1, 1], [0, 1, 1, 1], ["feeding", "drinking"])

    await write_report(report, path, {"split": "test", "seed": 0})

    with open(path) as f:
        data = json.load(f)
    assert data["display"]["overall_accuracy"] == "75.0%"
    assert data["display"]["per_category"]["feeding"] == "1.00/0.50"
    loaded = read_report(path)
    assert loaded.confusion.tolist() == [[1, 1], [0, 2]]
    assert loaded.provenance == {"split": "test", "seed": 0}
    assert loaded.recall_of("drinking") == 1.0


@pytest.mark.asyncio
async def test_read_report_errors(temp_dirs):
    _, output_dir = temp_dirs
    with pytest.raises(FileNotFoundError):
        read_report(os.path.join(output_dir, "missing.json"))
    path = os.path.join(output_dir, "bad.json")
    with open(path, "w") as f:
        f.write('{"confusion": [[1]]}')
    with pytest.raises(DataError):
        read_report(path)


def test_confusion_frame_layout():
    report = build_report([0, 0, 1, 1], [0, 1, 1, 1], ["feeding", "drinking"])
    frame = confusion_frame(report)
    assert list(frame.columns) == ["feeding", "drinking", "recall"]
    assert list(frame.index) == ["feeding", "drinking", "precision"]
    assert frame.loc["feeding", "recall"] == "0.50"
    assert frame.loc["precision", "drinking"] == "0.67"


def test_comparison_table():
    table = render_comparison_table({"Vanilla CLIP": 0.871, "Cattle-CLIP": 0.961})
    lines = table.splitlines()
    assert "Accuracy (%)" in lines[0]
    assert "87.1" in lines[1] and "96.1" in lines[2]


def test_mean_recall_ignores_undefined_categories():
    report = _report([1.0, None, 0.5], [1.0, None, 0.5], [1, 0, 2])
    assert report.mean_recall(["c0", "c1", "c2"]) == pytest.approx(0.75)
