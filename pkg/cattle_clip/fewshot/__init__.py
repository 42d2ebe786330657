from cattle_clip.fewshot.datasets import (
    build_base_dataset,
    build_combined_dataset,
    build_replay_dataset,
    category_histogram,
    sample_scarce,
)
from cattle_clip.fewshot.plan import SHOTS, FewShotConfig, FewShotPlan, StageSettings
from cattle_clip.fewshot.protocol import render_results, results_table, run_category, run_leave_one_out, summarize_results
from cattle_clip.fewshot.stages import StageResult, train_base, train_baseline, train_final

__all__ = [
    "build_base_dataset",
    "build_combined_dataset",
    "build_replay_dataset",
    "category_histogram",
    "sample_scarce",
    "SHOTS",
    "FewShotConfig",
    "FewShotPlan",
    "StageSettings",
    "render_results",
    "results_table",
    "run_category",
    "run_leave_one_out",
    "summarize_results",
    "StageResult",
    "train_base",
    "train_baseline",
    "train_final",
]
