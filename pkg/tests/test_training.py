import math
import os

import numpy as np
import pytest
import torch

from cattle_clip.augmentation import AugConfig
from cattle_clip.data import ClipStore, SynthConfig, generate_synthetic_dataset, split_dataset
from cattle_clip.errors import CheckpointError, ConfigError, DataError, NumericalError
from cattle_clip.model import CattleClip, ModelConfig
from cattle_clip.text import DeskTokenizer, TextConfig, build_prompt_set, tokenize
from cattle_clip.training import (
    TrainConfig,
    Trainer,
    build_optimizer,
    evaluate_clips,
    grad_check,
    load_checkpoint,
    lr_at,
    optimizer_step,
    restore_model,
    save_checkpoint,
    train_supervised,
)
from cattle_clip.training.gradcheck import max_relative_error


async def _loaded(manifest_dir, manifest):
    return await ClipStore(manifest_dir).load(manifest.records)


def test_lr_schedule_examples():
    config = TrainConfig(base_lr=2.2e-4, warmup_epochs=5, total_epochs=30)
    assert lr_at(4, config) == pytest.approx(2.2e-4)
    assert lr_at(0, config) == pytest.approx(2.2e-4 / 5)
    assert lr_at(30, config) == 0.0
    assert lr_at(5, config) == pytest.approx(2.2e-4)


def test_lr_schedule_closed_form():
    config = TrainConfig(base_lr=1e-3, warmup_epochs=3, total_epochs=12)
    for epoch in range(3, 13):
        expected = 1e-3 * 0.5 * (1 + math.cos(math.pi * (epoch - 3) / 9))
        assert lr_at(epoch, config) == pytest.approx(expected, abs=1e-15)
    values = [lr_at(e, config) for e in range(3, 13)]
    assert values == sorted(values, reverse=True)


def test_lr_schedule_range():
    config = TrainConfig(total_epochs=10)
    with pytest.raises(DataError):
        lr_at(-1, config)
    with pytest.raises(DataError):
        lr_at(11, config)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(warmup_epochs=5, total_epochs=5)
    with pytest.raises(ConfigError):
        TrainConfig(base_lr=0.0)
    assert TrainConfig(augment=False).ablation_row == "vanilla+text prompts"
    assert TrainConfig(augment=False, prompt_remap=False).ablation_row == "vanilla"


def test_zero_gradients_without_decay_leave_parameters_unchanged(desk_model):
    before = {k: v.clone() for k, v in desk_model.state_dict().items()}
    optimizer = build_optimizer(desk_model, TrainConfig(weight_decay=0.0))

    optimizer_step(optimizer, 1e-2)

    for name, value in desk_model.state_dict().items():
        assert torch.equal(value, before[name]), name


def test_zero_gradients_apply_decoupled_decay(desk_model):
    before = {k: v.clone() for k, v in desk_model.state_dict().items()}
    optimizer = build_optimizer(desk_model, TrainConfig(weight_decay=0.1))

    optimizer_step(optimizer, 0.5)

    state = desk_model.state_dict()
    decayed = set(desk_model.decayed_parameter_names())
    assert "visual.proj" in decayed and "text.proj" in decayed
    assert "visual.cls_token" not in decayed and "log_temperature" not in decayed
    for name in state:
        if name in decayed:
            assert torch.allclose(state[name], before[name] * (1 - 0.5 * 0.1)), name
        else:
            assert torch.equal(state[name], before[name]), name


def test_constant_gradient_update_approaches_lr():
    param = torch.nn.Parameter(torch.tensor([1.0], dtype=torch.float64))
    optimizer = torch.optim.AdamW([param], lr=1e-3, weight_decay=0.0)
    for _ in range(500):
        previous = param.detach().clone()
        param.grad = torch.tensor([0.3], dtype=torch.float64)
        optimizer_step(optimizer, 1e-3)
    assert float(previous - param.detach()) == pytest.approx(1e-3, rel=1e-4)


def test_non_finite_gradient_is_reported():
    param = torch.nn.Parameter(torch.ones(2))
    optimizer = torch.optim.AdamW([param], lr=1e-3)
    param.grad = torch.tensor([float("nan"), 0.0])
    with pytest.raises(NumericalError):
        optimizer_step(optimizer, 1e-3)


@pytest.mark.asyncio
async def test_training_is_deterministic(small_dataset):
    """Two runs with the same seed produce identical histories"""
    manifest_dir, manifest = small_dataset
    store = await _loaded(manifest_dir, manifest)
    prompts = build_prompt_set(manifest.categories, TextConfig())
    config = TrainConfig(warmup_epochs=1, total_epochs=2, batch_size=4)

    histories = []
    for _ in range(2):
        _, history = train_supervised(
            CattleClip(ModelConfig(), seed=0),
            manifest.split("train"),
            manifest.split("val"),
            store,
            prompts,
            config,
            AugConfig(),
        )
        histories.append(history.records)

    assert histories[0] == histories[1]
    assert histories[0][0].lr == lr_at(0, config)
    assert all(math.isfinite(r.train_loss) for r in histories[0])
    assert all(r.val_accuracy is not None for r in histories[0])


@pytest.mark.asyncio
async def test_empty_training_split_is_rejected(small_dataset):
    manifest_dir, manifest = small_dataset
    store = await _loaded(manifest_dir, manifest)
    prompts = build_prompt_set(manifest.categories, TextConfig())
    trainer = Trainer(CattleClip(ModelConfig()), prompts, store, TrainConfig(), AugConfig())
    with pytest.raises(DataError):
        trainer.fit([])


@pytest.mark.asyncio
async def test_checkpoint_round_trip(temp_dirs, desk_model):
    _, output_dir = temp_dirs
    path = os.path.join(output_dir, "checkpoint.pt")
    categories = ["feeding", "drinking"]

    save_checkpoint(path, desk_model, categories, epoch=3, history=[{"epoch": 0}])
    checkpoint = load_checkpoint(path)

    assert checkpoint.epoch == 3
    assert checkpoint.categories == categories
    rebuilt = checkpoint.build_model()
    for name, value in desk_model.state_dict().items():
        assert torch.equal(rebuilt.state_dict()[name], value), name
    assert not any(name.startswith(".tmp") for name in os.listdir(output_dir))


@pytest.mark.asyncio
async def test_truncated_checkpoint_fails_loudly(temp_dirs, desk_model):
    _, output_dir = temp_dirs
    path = os.path.join(output_dir, "checkpoint.pt")
    save_checkpoint(path, desk_model, ["feeding"])
    with open(path, "rb") as f:
        payload = f.read()
    with open(path, "wb") as f:
        f.write(payload[: len(payload) // 2])

    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    with pytest.raises(FileNotFoundError):
        load_checkpoint(os.path.join(output_dir, "missing.pt"))


def test_restore_into_different_architecture_lists_mismatches(desk_model):
    other = CattleClip(ModelConfig(projection_dim=8))
    with pytest.raises(CheckpointError, match="visual.proj"):
        restore_model(other, desk_model.state_dict())


@pytest.mark.asyncio
async def test_resume_continues_identically(small_dataset, temp_dirs):
    """Stopping after two epochs and resuming gives the same history as an uninterrupted run"""
    manifest_dir, manifest = small_dataset
    _, output_dir = temp_dirs
    store = await _loaded(manifest_dir, manifest)
    prompts = build_prompt_set(manifest.categories, TextConfig())
    config = TrainConfig(warmup_epochs=1, total_epochs=4, batch_size=8)
    train = manifest.split("train")

    straight = Trainer(CattleClip(ModelConfig(), seed=0), prompts, store, config, AugConfig()).fit(train)

    interrupted = Trainer(CattleClip(ModelConfig(), seed=0), prompts, store, config, AugConfig(), output_dir=output_dir)
    interrupted.fit(train, until=2)
    checkpoint = load_checkpoint(os.path.join(output_dir, "checkpoint.pt"))
    assert checkpoint.epoch == 2
    assert os.path.exists(os.path.join(output_dir, "history.jsonl"))

    resumed = Trainer(CattleClip(ModelConfig(), seed=5), prompts, store, config, AugConfig())
    resumed.resume(checkpoint)
    history = resumed.fit(train)

    assert history.records == straight.records


@pytest.mark.asyncio
async def test_evaluation_is_reproducible(small_dataset, desk_model):
    manifest_dir, manifest = small_dataset
    store = await _loaded(manifest_dir, manifest)
    prompts = build_prompt_set(manifest.categories, TextConfig())
    records = manifest.split("test")

    first = evaluate_clips(desk_model, records, store, prompts, AugConfig(), seed=1)
    second = evaluate_clips(desk_model, records, store, prompts, AugConfig(), seed=1)

    assert np.array_equal(first[0], second[0])
    assert np.array_equal(first[1], second[1])
    assert len(first[1]) == len(records)


def _grad_inputs(texts):
    tokenizer = DeskTokenizer.default()
    videos = np.random.default_rng(0).random((2, 4, 16, 16, 3))
    return videos, [0, 1], [tokenize(t, tokenizer) for t in texts]


def test_gradients_match_central_differences(desk_model):
    videos, labels, prompts = _grad_inputs(["a photo of a feeding .", "a photo of a drinking .", "a photo of a cow ."])

    report = grad_check(desk_model, videos, labels, prompts)

    name, error = max_relative_error(report)
    assert error < 1e-3, name
    assert all(entry.max_abs_analytic > 0 for entry in report.values())


def test_identical_prompts_give_zero_gradients(desk_model):
    videos, labels, prompts = _grad_inputs(["a photo of a feeding ."] * 2)

    report = grad_check(desk_model, videos, labels, prompts)

    for entry in report.values():
        assert entry.max_abs_analytic < 1e-9
        assert entry.max_abs_numeric < 1e-9


@pytest.mark.slow
@pytest.mark.asyncio
async def test_desk_model_learns_synthetic_categories(temp_dirs):
    input_dir, _ = temp_dirs
    manifest = split_dataset(await generate_synthetic_dataset(SynthConfig(clips_per_category=20), input_dir), seed=0)
    store = await _loaded(input_dir, manifest)
    prompts = build_prompt_set(manifest.categories, TextConfig())

    _, history = train_supervised(
        CattleClip(ModelConfig(), seed=0),
        manifest.split("train"),
        manifest.split("val"),
        store,
        prompts,
        TrainConfig(),
        AugConfig(),
    )

    assert history.records[-1].val_accuracy >= 0.95
