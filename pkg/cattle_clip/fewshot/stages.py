"""
The three training stages of the base-to-novel protocol.

Each stage trains in its own output directory and leaves ``checkpoint.pt``,
``history.jsonl`` and ``result.json`` there. A directory that already holds
``result.json`` is treated as done and read back instead of retrained.
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

from cattle_clip.data.manifest import ClipRecord, Manifest
from cattle_clip.data.sampling import ClipStore
from cattle_clip.errors import CheckpointError
from cattle_clip.evaluation.metrics import MetricsReport
from cattle_clip.evaluation.report import report_from_dict, report_to_dict
from cattle_clip.fewshot.datasets import (
    base_categories,
    build_base_dataset,
    build_combined_dataset,
    build_replay_dataset,
    sample_scarce,
)
from cattle_clip.fewshot.plan import FewShotPlan, StageSettings
from cattle_clip.model.clip import CattleClip, import_weights, load_weight_file
from cattle_clip.text.config import PromptSet, build_prompt_set
from cattle_clip.training.checkpoint import load_checkpoint, save_checkpoint
from cattle_clip.training.config import TrainConfig
from cattle_clip.training.trainer import evaluate_report, train_supervised
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger(__name__)

RESULT_FILE = "result.json"
CHECKPOINT_FILE = "checkpoint.pt"


@dataclass
class StageResult:
    stage: str
    scarce_category: str
    n: Optional[int]
    seed: int
    checkpoint: str
    report: MetricsReport
    train_ids: List[str] = field(default_factory=list)
    scarce_ids: List[str] = field(default_factory=list)
    epochs: int = 0
    lr: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "scarce_category": self.scarce_category,
            "n": self.n,
            "seed": self.seed,
            "checkpoint": self.checkpoint,
            "report": report_to_dict(self.report),
            "train_ids": self.train_ids,
            "scarce_ids": self.scarce_ids,
            "epochs": self.epochs,
            "lr": self.lr,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StageResult":
        return cls(**{**data, "report": report_from_dict(data["report"])})


def stage_directory(root: str, stage: str, plan: FewShotPlan) -> str:
    seed_dir = os.path.join(root, plan.scarce_category, f"seed{plan.seed}")
    if stage == "base":
        return os.path.join(seed_dir, "base")
    return os.path.join(seed_dir, f"n{plan.n}", stage)


def fresh_model(settings: StageSettings, seed: int) -> CattleClip:
    model = CattleClip(settings.model, settings.contrastive, seed=seed)
    if settings.model.init_weights:
        import_weights(model, load_weight_file(settings.model.init_weights))
    return model


class Stage(FileManager):
    """Base class for all protocol stages"""

    name = ""

    def __init__(self, output_root: str, plan: FewShotPlan, manifest: Manifest, store: ClipStore, settings: StageSettings):
        super().__init__("", stage_directory(output_root, self.name, plan))
        self.output_root = output_root
        self.plan = plan
        self.manifest = manifest
        self.store = store
        self.settings = settings
        self.all_prompts = build_prompt_set(
            manifest.categories, settings.text, settings.train.prompt_remap, max_tokens=settings.model.max_tokens,
            vocab_size=settings.model.vocab_size,
        )

    def prompt_set(self) -> PromptSet:
        return self.all_prompts

    def training_records(self) -> List[ClipRecord]:
        raise NotImplementedError("Subclasses must implement this method")

    def initial_model(self) -> CattleClip:
        return fresh_model(self.settings, self.plan.seed)

    def epochs(self) -> int:
        return self.plan.base_epochs

    def learning_rate(self) -> float:
        return self.plan.base_lr_stage1

    def train_config(self) -> TrainConfig:
        epochs = self.epochs()
        return replace(
            self.settings.train,
            base_lr=self.learning_rate(),
            total_epochs=epochs,
            warmup_epochs=min(self.settings.train.warmup_epochs, epochs - 1),
            seed=self.plan.seed,
        )

    def scarce_records(self) -> List[ClipRecord]:
        return sample_scarce(self.manifest, self.plan.scarce_category, self.plan.n, self.plan.seed)

    @property
    def n(self) -> Optional[int]:
        return self.plan.n

    def _read_result(self) -> Optional[StageResult]:
        path = self.output_path(RESULT_FILE)
        if not os.path.isfile(path):
            return None
        with open(path, "r", encoding="utf-8") as f:
            return StageResult.from_dict(json.load(f))

    async def run(self) -> StageResult:
        """Train, evaluate on the validation split and persist the stage"""
        done = self._read_result()
        if done is not None:
            logger.info("Skipping %s stage of %s, result present", self.name, self.plan.cell)
            return done
        prompts = self.prompt_set()
        records = self.training_records()
        validation = [r for r in self.manifest.split("val") if r.label in prompts.categories]
        await self.store.load(records + validation)
        config = self.train_config()
        logger.info("Training %s stage of %s on %d clips for %d epochs", self.name, self.plan.cell, len(records), config.total_epochs)
        model, history = train_supervised(
            self.initial_model(),
            records,
            (),
            self.store,
            prompts,
            config,
            self.settings.aug,
            self.settings.eval_seed,
        )
        report = evaluate_report(
            model, validation, self.store, prompts, self.settings.aug, self.settings.eval_seed, self.settings.threshold
        )
        await self.ensure_output_directory()
        checkpoint = self.output_path(CHECKPOINT_FILE)
        save_checkpoint(
            checkpoint,
            model,
            list(prompts.categories),
            epoch=config.total_epochs,
            history=history.to_records(),
            metadata={"stage": self.name, "scarce_category": self.plan.scarce_category, "n": self.n, "seed": self.plan.seed},
        )
        await self.write_jsonl("history.jsonl", history.to_records())
        result = StageResult(
            stage=self.name,
            scarce_category=self.plan.scarce_category,
            n=self.n,
            seed=self.plan.seed,
            checkpoint=checkpoint,
            report=report,
            train_ids=[r.clip_id for r in records],
            scarce_ids=[r.clip_id for r in records if r.label == self.plan.scarce_category],
            epochs=config.total_epochs,
            lr=config.base_lr,
        )
        await self.write_text(RESULT_FILE, json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
        return result


class BaseStage(Stage):
    """Five base behaviours only, five prompts"""

    name = "base"

    @property
    def n(self) -> Optional[int]:
        return None

    def prompt_set(self) -> PromptSet:
        return self.all_prompts.subset(base_categories(self.manifest, self.plan.scarce_category))

    def training_records(self) -> List[ClipRecord]:
        return build_base_dataset(self.manifest, self.plan.scarce_category)


class FinalStage(Stage):
    """Starts from the base checkpoint and adapts on the balanced replay set over six prompts"""

    name = "final"

    def initial_model(self) -> CattleClip:
        path = os.path.join(stage_directory(self.output_root, "base", self.plan), CHECKPOINT_FILE)
        checkpoint = load_checkpoint(path)
        meta = checkpoint.metadata
        if meta.get("stage") != "base" or meta.get("scarce_category") != self.plan.scarce_category:
            raise CheckpointError(
                f"{path} belongs to stage {meta.get('stage')!r} / category {meta.get('scarce_category')!r}, "
                f"expected base / {self.plan.scarce_category!r}"
            )
        return checkpoint.build_model()

    def epochs(self) -> int:
        return self.plan.final_epochs

    def learning_rate(self) -> float:
        return self.plan.base_lr_stage2

    def training_records(self) -> List[ClipRecord]:
        base = build_base_dataset(self.manifest, self.plan.scarce_category)
        return build_replay_dataset(self.scarce_records(), base, self.plan.seed)


class BaselineStage(Stage):
    """Single-stage training on the imbalanced union of the base and scarce sets"""

    name = "baseline"

    def training_records(self) -> List[ClipRecord]:
        base = build_base_dataset(self.manifest, self.plan.scarce_category)
        return build_combined_dataset(self.scarce_records(), base)


async def train_base(plan: FewShotPlan, manifest: Manifest, store: ClipStore, settings: StageSettings, output_root: str) -> StageResult:
    return await BaseStage(output_root, plan, manifest, store, settings).run()


async def train_final(plan: FewShotPlan, manifest: Manifest, store: ClipStore, settings: StageSettings, output_root: str) -> StageResult:
    return await FinalStage(output_root, plan, manifest, store, settings).run()


async def train_baseline(plan: FewShotPlan, manifest: Manifest, store: ClipStore, settings: StageSettings, output_root: str) -> StageResult:
    return await BaselineStage(output_root, plan, manifest, store, settings).run()
