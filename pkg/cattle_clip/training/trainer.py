import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from cattle_clip.augmentation import AugConfig, apply_train_augs, preprocess_stack
from cattle_clip.data.manifest import ClipRecord
from cattle_clip.data.sampling import ClipStore, derive_rng
from cattle_clip.errors import DataError, NumericalError
from cattle_clip.evaluation.metrics import MetricsReport, build_report
from cattle_clip.model.clip import CattleClip
from cattle_clip.model.head import contrastive_ce_loss, predict_batch
from cattle_clip.text.config import PromptSet
from cattle_clip.training.checkpoint import Checkpoint, restore_model, save_checkpoint
from cattle_clip.training.config import TrainConfig
from cattle_clip.training.optim import build_optimizer, optimizer_step
from cattle_clip.training.schedule import lr_at
from cattle_clip.utils.file_manager import write_atomic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    val_accuracy: Optional[float] = None
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class TrainHistory:
    records: List[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def to_records(self) -> List[dict]:
        return [asdict(r) for r in self.records]

    @classmethod
    def from_records(cls, rows: Sequence[dict]) -> "TrainHistory":
        return cls([EpochRecord(**row) for row in rows])

    def __len__(self) -> int:
        return len(self.records)


def resolve_aug(aug: AugConfig, model: CattleClip) -> AugConfig:
    """Fill in the target size from the model when the config leaves it open"""
    if aug.target_size is None:
        return replace(aug, target_size=model.config.image_size)
    return aug


def _batches(items: Sequence, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def evaluate_clips(
    model: CattleClip,
    records: Sequence[ClipRecord],
    store: ClipStore,
    prompts: PromptSet,
    aug: AugConfig,
    seed: int = 0,
    batch_size: int = 8,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Predict every clip with the eval pipeline (fill + resize). Frames are drawn
    with an rng derived from ``(seed, clip_id)``.

    Returns:
        (true label indices, predicted label indices), both in record order
    """
    aug = resolve_aug(aug, model)
    label_of = {c: i for i, c in enumerate(prompts.categories)}
    unknown = sorted({r.label for r in records} - set(label_of))
    if unknown:
        raise DataError(f"labels {unknown} are outside the prompt set {list(prompts.categories)}")
    K = model.config.frames
    was_training = model.training
    model.eval()
    predictions = []
    try:
        with torch.no_grad():
            text_embs = model.encode_token_sequences(prompts.sequences)
            tau = model.temperature()
            for batch in _batches(list(records), batch_size):
                videos = np.stack(
                    [preprocess_stack(store.sample(r, K, derive_rng(seed, r.clip_id)), aug).frames for r in batch]
                )
                predicted, _ = predict_batch(model.encode_videos(videos), text_embs, tau)
                predictions.extend(int(p) for p in predicted)
    finally:
        model.train(was_training)
    true = np.array([label_of[r.label] for r in records], dtype=np.int64)
    return true, np.array(predictions, dtype=np.int64)


def evaluate_report(
    model: CattleClip,
    records: Sequence[ClipRecord],
    store: ClipStore,
    prompts: PromptSet,
    aug: AugConfig,
    seed: int = 0,
    threshold: float = 0.17,
) -> MetricsReport:
    true, predicted = evaluate_clips(model, records, store, prompts, aug, seed)
    return build_report(true, predicted, prompts.categories, threshold)


class Trainer:
    """
    Full fine-tuning loop. Per epoch every training clip is resampled and
    augmented with an rng derived from ``(seed, epoch, clip_id)``, and the
    prompt embeddings are recomputed at every step.
    """

    def __init__(
        self,
        model: CattleClip,
        prompts: PromptSet,
        store: ClipStore,
        config: TrainConfig,
        aug: AugConfig,
        eval_seed: int = 0,
        output_dir: Optional[str] = None,
        metadata: Optional[Dict] = None,
    ):
        self.model = model
        self.prompts = prompts
        self.store = store
        self.config = config
        self.aug = replace(resolve_aug(aug, model), enabled=aug.enabled and config.augment)
        self.eval_seed = eval_seed
        self.output_dir = output_dir
        self.metadata = dict(metadata or {})
        self.optimizer = build_optimizer(model, config)
        self.history = TrainHistory()
        self.start_epoch = 0
        self._label_of = {c: i for i, c in enumerate(prompts.categories)}

    @property
    def checkpoint_path(self) -> Optional[str]:
        return os.path.join(self.output_dir, "checkpoint.pt") if self.output_dir else None

    def resume(self, checkpoint: Checkpoint) -> None:
        """Restore parameters, optimiser state, epoch counter and history"""
        restore_model(self.model, checkpoint.state_dict)
        if checkpoint.optimizer is not None:
            self.optimizer.load_state_dict(checkpoint.optimizer)
        self.start_epoch = checkpoint.epoch
        self.history = TrainHistory.from_records(checkpoint.history)
        logger.info("Resuming at epoch %d", self.start_epoch)

    def _training_batch(self, batch: Sequence[ClipRecord], epoch: int) -> Tuple[np.ndarray, np.ndarray]:
        K = self.model.config.frames
        videos = []
        for record in batch:
            rng = derive_rng(self.config.seed, epoch, record.clip_id)
            videos.append(apply_train_augs(self.store.sample(record, K, rng), self.aug, rng).frames)
        labels = np.array([self._label_of[r.label] for r in batch], dtype=np.int64)
        return np.stack(videos), labels

    def _train_epoch(self, records: Sequence[ClipRecord], epoch: int, lr: float) -> float:
        self.model.train()
        order = derive_rng(self.config.seed, "order", epoch).permutation(len(records))
        shuffled = [records[int(i)] for i in order]
        losses = []
        for batch_index, batch in enumerate(_batches(shuffled, self.config.batch_size)):
            videos, labels = self._training_batch(batch, epoch)
            self.optimizer.zero_grad(set_to_none=True)
            try:
                video_embs = self.model.encode_videos(videos)
                text_embs = self.model.encode_token_sequences(self.prompts.sequences)
                loss = contrastive_ce_loss(video_embs, labels, text_embs, self.model.temperature())
                loss.backward()
                optimizer_step(self.optimizer, lr)
            except NumericalError as exc:
                raise NumericalError(f"epoch {epoch} batch {batch_index}: {exc}") from exc
            losses.append(float(loss.detach()))
        return float(np.mean(losses))

    def fit(
        self,
        train_records: Sequence[ClipRecord],
        val_records: Sequence[ClipRecord] = (),
        until: Optional[int] = None,
    ) -> TrainHistory:
        """Run epochs from the resume point up to ``until`` (default: all of them)"""
        if not train_records:
            raise DataError("training split is empty")
        unknown = sorted({r.label for r in list(train_records) + list(val_records)} - set(self._label_of))
        if unknown:
            raise DataError(f"labels {unknown} are outside the prompt set {list(self.prompts.categories)}")
        train_records = list(train_records)
        stop = self.config.total_epochs if until is None else min(until, self.config.total_epochs)
        for epoch in range(self.start_epoch, stop):
            started = time.perf_counter()
            lr = lr_at(epoch, self.config)
            train_loss = self._train_epoch(train_records, epoch, lr)
            if not math.isfinite(train_loss):
                raise NumericalError(f"epoch {epoch}: non-finite mean loss")
            val_accuracy = None
            if val_records:
                true, predicted = evaluate_clips(
                    self.model, val_records, self.store, self.prompts, self.aug, self.eval_seed
                )
                val_accuracy = float(np.mean(true == predicted))
            record = EpochRecord(epoch, lr, train_loss, val_accuracy, time.perf_counter() - started)
            self.history.append(record)
            logger.info(
                "epoch %d lr %.3g loss %.4f val %s", epoch, lr, train_loss, "-" if val_accuracy is None else f"{val_accuracy:.3f}"
            )
            if self.output_dir:
                self._write_progress(epoch + 1)
        return self.history

    def _write_progress(self, next_epoch: int) -> None:
        os.makedirs(self.output_dir, exist_ok=True)
        lines = "".join(json.dumps(row, sort_keys=True) + "\n" for row in self.history.to_records())
        write_atomic(os.path.join(self.output_dir, "history.jsonl"), lines.encode("utf-8"))
        save_checkpoint(
            self.checkpoint_path,
            self.model,
            list(self.prompts.categories),
            self.optimizer,
            next_epoch,
            self.history.to_records(),
            self.metadata,
        )


def train_supervised(
    model: CattleClip,
    train_records: Sequence[ClipRecord],
    val_records: Sequence[ClipRecord],
    store: ClipStore,
    prompts: PromptSet,
    config: TrainConfig,
    aug: AugConfig,
    eval_seed: int = 0,
    output_dir: Optional[str] = None,
    resume_from: Optional[Checkpoint] = None,
    metadata: Optional[Dict] = None,
) -> Tuple[CattleClip, TrainHistory]:
    """
    Train ``model`` in place on the training records.

    Args:
        store: Clip store already holding the frames of every record
        output_dir: When given, history.jsonl and checkpoint.pt are refreshed after every epoch
        resume_from: Checkpoint to continue from
    """
    trainer = Trainer(model, prompts, store, config, aug, eval_seed, output_dir, metadata)
    if resume_from is not None:
        trainer.resume(resume_from)
    return model, trainer.fit(train_records, val_records)
