"""Leave-one-out driver and the results table."""

import asyncio
import logging
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from cattle_clip.data.manifest import Manifest
from cattle_clip.data.sampling import ClipStore
from cattle_clip.errors import DataError
from cattle_clip.evaluation.metrics import flag_suboptimal
from cattle_clip.fewshot.plan import FewShotConfig, FewShotPlan, StageSettings
from cattle_clip.fewshot.stages import StageResult, train_base, train_baseline, train_final
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger(__name__)

TABLE_COLUMNS = [
    "scarce_category",
    "n",
    "seed",
    "stage",
    "overall_accuracy",
    "scarce_precision",
    "scarce_recall",
    "base_recall",
    "base_recall_retention",
    "suboptimal",
]


async def run_category(
    manifest: Manifest,
    store: ClipStore,
    settings: StageSettings,
    config: FewShotConfig,
    output_root: str,
    scarce_category: str,
    seed: int,
    ns: Optional[Sequence[int]] = None,
    stages: Sequence[str] = ("base", "final", "baseline"),
) -> List[StageResult]:
    """The base stage for one category and seed, then final and baseline for each n"""
    ns = config.ns if ns is None else ns
    results = []
    first = FewShotPlan.from_config(scarce_category, ns[0], seed, config)
    if "base" in stages or "final" in stages:
        results.append(await train_base(first, manifest, store, settings, output_root))
    for n in ns:
        plan = FewShotPlan.from_config(scarce_category, n, seed, config)
        if "final" in stages:
            results.append(await train_final(plan, manifest, store, settings, output_root))
        if "baseline" in stages:
            results.append(await train_baseline(plan, manifest, store, settings, output_root))
    return results


def _category_worker(
    manifest: Manifest,
    store_root: str,
    settings: StageSettings,
    config: FewShotConfig,
    output_root: str,
    scarce_category: str,
    seed: int,
    ns: Sequence[int],
    stages: Sequence[str],
) -> List[dict]:
    """Process-pool entry: a private clip store and event loop per worker"""
    store = ClipStore(store_root)
    results = asyncio.run(run_category(manifest, store, settings, config, output_root, scarce_category, seed, ns, stages))
    return [r.to_dict() for r in results]


async def run_leave_one_out(
    manifest: Manifest,
    store: ClipStore,
    settings: StageSettings,
    config: FewShotConfig,
    output_root: str,
    jobs: int = 1,
    categories: Optional[Sequence[str]] = None,
    ns: Optional[Sequence[int]] = None,
    stages: Sequence[str] = ("base", "final", "baseline"),
) -> pd.DataFrame:
    """
    Run every (category, seed) cell, each category in turn taking the scarce
    role. Completed stages are read back from disk. With ``jobs`` > 1 cells
    run in separate processes.

    Returns:
        The results table, also written as results.jsonl and results.txt
    """
    if not manifest.is_split:
        raise DataError("the few-shot protocol needs a manifest with assigned splits")
    categories = list(categories or config.categories or manifest.categories)
    ns = tuple(config.ns if ns is None else ns)
    cells = [(c, s) for c in categories for s in config.seeds]
    logger.info("Found %d cells to run", len(cells))
    results: List[StageResult] = []
    if jobs > 1:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=jobs, mp_context=multiprocessing.get_context("spawn")) as pool:
            tasks = [
                loop.run_in_executor(
                    pool,
                    _category_worker,
                    manifest,
                    store.input_files_path,
                    settings,
                    config,
                    output_root,
                    category,
                    seed,
                    ns,
                    tuple(stages),
                )
                for category, seed in cells
            ]
            for rows in await asyncio.gather(*tasks):
                results.extend(StageResult.from_dict(r) for r in rows)
    else:
        for category, seed in cells:
            results.extend(await run_category(manifest, store, settings, config, output_root, category, seed, ns, stages))
    table = results_table(results)
    writer = FileManager("", output_root)
    await writer.write_jsonl("results.jsonl", [r.to_dict() for r in results])
    await writer.write_text("results.txt", render_results(table) + "\n")
    logger.info("Wrote %d stage results to %s", len(results), os.path.join(output_root, "results.jsonl"))
    return table


def results_table(results: Sequence[StageResult]) -> pd.DataFrame:
    """
    One row per stage result. Scarce columns are empty for base runs;
    retention is the final model's mean base recall minus the base model's.
    """
    base_recall = {}
    for r in results:
        if r.stage == "base":
            base_recall[(r.scarce_category, r.seed)] = r.report.mean_recall(r.report.category_order)
    rows = []
    for r in results:
        report = r.report
        base_categories = [c for c in report.category_order if c != r.scarce_category]
        row = {
            "scarce_category": r.scarce_category,
            "n": r.n,
            "seed": r.seed,
            "stage": r.stage,
            "overall_accuracy": report.overall_accuracy,
            "scarce_precision": None,
            "scarce_recall": None,
            "base_recall": report.mean_recall(base_categories),
            "base_recall_retention": None,
            "suboptimal": flag_suboptimal(report, report.threshold),
        }
        if r.scarce_category in report.category_order:
            index = report.category_order.index(r.scarce_category)
            row["scarce_precision"] = report.precision[index]
            row["scarce_recall"] = report.recall[index]
        reference = base_recall.get((r.scarce_category, r.seed))
        if r.stage == "final" and reference is not None:
            row["base_recall_retention"] = row["base_recall"] - reference
        rows.append(row)
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def summarize_results(table: pd.DataFrame) -> pd.DataFrame:
    """Mean over seeds per (category, n, stage)"""
    if table.empty:
        return table
    numeric = ["overall_accuracy", "scarce_recall", "base_recall", "base_recall_retention"]
    frame = table.copy()
    frame[numeric] = frame[numeric].astype(float)
    frame["n"] = frame["n"].fillna(0).astype(int)
    summary = frame.groupby(["scarce_category", "n", "stage"], sort=False)[numeric].mean()
    summary["suboptimal_runs"] = frame.groupby(["scarce_category", "n", "stage"], sort=False)["suboptimal"].sum()
    return summary.reset_index()


def render_results(table: pd.DataFrame) -> str:
    """Per-seed rows followed by the seed means, percentages with one decimal"""
    if table.empty:
        return "no results"
    shown = table.copy()
    for column in ("overall_accuracy", "scarce_recall", "base_recall"):
        shown[column] = [("-" if np.isnan(v) else f"{v * 100:.1f}") for v in shown[column].astype(float)]
    shown["suboptimal"] = ["x" if flag else "" for flag in shown["suboptimal"]]
    per_seed = shown.drop(columns=["scarce_precision", "base_recall_retention"]).to_string(index=False)
    return per_seed + "\n\nmean over seeds\n" + summarize_results(table).to_string(index=False, float_format=lambda v: f"{v:.3f}")
