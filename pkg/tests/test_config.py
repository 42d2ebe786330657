import os

import pytest

from cattle_clip.config import GlobalConfig, dump_config, load_config, parse_scalar
from cattle_clip.errors import ConfigError
from cattle_clip.fewshot import FewShotConfig


def test_desk_defaults():
    config = GlobalConfig.desk()
    assert config.model.image_size == (16, 16)
    assert config.augmentation.target_size == (16, 16)
    assert config.training.weight_decay == 1e-3
    assert config.evaluation.threshold == 0.17


def test_full_preset():
    config = GlobalConfig.full()
    assert config.model.hidden_dim == 768
    assert config.model.frames == 8
    assert config.augmentation.target_size == (224, 224)
    assert config.training.base_lr == 2.2e-4
    assert config.fewshot.base_lr == 2.2e-5


def test_overrides_are_typed():
    config = load_config(overrides=["training.base_lr=1e-3", "augmentation.enabled=false", "fewshot.ns=[16,2]"])
    assert config.training.base_lr == 1e-3
    assert config.augmentation.enabled is False
    assert config.fewshot.ns == (16, 2)


def test_image_size_override_moves_the_target_size():
    config = load_config(overrides=["model.image_size=[32,32]"])
    assert config.augmentation.target_size == (32, 32)


def test_unknown_keys_and_sections_are_rejected():
    with pytest.raises(ConfigError):
        load_config(overrides=["training.learning_rate=1"])
    with pytest.raises(ConfigError):
        load_config(overrides=["optimizer.lr=1"])
    with pytest.raises(ConfigError):
        load_config(overrides=["training"])
    with pytest.raises(ConfigError):
        load_config(overrides=["training.warmup_epochs=40"])


def test_seed_is_routed_into_every_section():
    config = GlobalConfig(fewshot=FewShotConfig(seeds=(0, 1, 2))).with_seed(7)
    assert config.dataset.split_seed == 7
    assert config.synth.seed == 7
    assert config.training.seed == 7
    assert config.evaluation.seed == 7
    assert config.fewshot.seeds == (7, 8, 9)


def test_parse_scalar():
    assert parse_scalar("1e-3") == 1e-3
    assert parse_scalar("3") == 3
    assert parse_scalar("true") is True
    assert parse_scalar("feeding") == "feeding"


def test_config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("model:\n  preset: vitb16\n  image_layers: 1\ntraining:\n  total_epochs: 3\n  warmup_epochs: 1\n")

    config = load_config(str(path))

    assert config.model_preset == "vitb16"
    assert config.model.image_layers == 1
    assert config.model.hidden_dim == 768
    assert config.augmentation.target_size == (224, 224)
    assert config.training.total_epochs == 3


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.yaml"))
    bad = tmp_path / "bad.yaml"
    bad.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))


@pytest.mark.asyncio
async def test_dumped_config_loads_back_identically(temp_dirs):
    _, output_dir = temp_dirs
    config = load_config(overrides=["training.base_lr=5e-4", "text.cow_template=true"])

    path = await dump_config(config, output_dir)

    assert os.path.basename(path) == "config.yaml"
    assert load_config(path) == config
