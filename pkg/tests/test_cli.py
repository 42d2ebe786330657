import json
import os

import pytest

from cattle_clip.cli import main
from cattle_clip.model import CattleClip, ModelConfig
from cattle_clip.training import save_checkpoint

SMALL_SYNTH = ["--set", "synth.clips_per_category=2", "--set", "synth.num_frames=6"]


async def _synth(out_dir, *extra):
    return await main(["synth", "--out", out_dir, *SMALL_SYNTH, *extra])


@pytest.mark.asyncio
async def test_synth_writes_dataset_config_and_log(temp_dirs):
    _, output_dir = temp_dirs

    assert await _synth(output_dir) == 0

    for name in ("manifest.jsonl", "config.yaml", "run.log"):
        assert os.path.exists(os.path.join(output_dir, name))
    with open(os.path.join(output_dir, "manifest.jsonl")) as f:
        assert len(f.read().splitlines()) == 1 + 12


@pytest.mark.asyncio
async def test_synth_is_reproducible_under_seed(temp_dirs):
    input_dir, output_dir = temp_dirs
    await _synth(input_dir, "--seed", "3")
    await _synth(output_dir, "--seed", "3")

    for name in ("manifest.jsonl", os.path.join("clips", "feeding", "feeding_000.npy")):
        with open(os.path.join(input_dir, name), "rb") as a, open(os.path.join(output_dir, name), "rb") as b:
            assert a.read() == b.read()


@pytest.mark.asyncio
async def test_config_errors_exit_with_one(temp_dirs):
    _, output_dir = temp_dirs
    assert await main(["synth", "--out", output_dir, "--set", "training.nope=1"]) == 1
    assert await main(["synth", "--out", output_dir, "--config", os.path.join(output_dir, "none.yaml")]) == 1
    assert await main(["render"]) == 1


@pytest.mark.asyncio
async def test_malformed_tracklets_exit_with_two(temp_dirs):
    input_dir, output_dir = temp_dirs
    path = os.path.join(input_dir, "tracklets.jsonl")
    with open(path, "w") as f:
        f.write('{"frame_index": 0, "track_id": 0, "bbox": [0.5, 0.1, 0.7, 0.2]}\n')

    assert await main(["curate", path, "--out", output_dir]) == 2
    assert await main(["curate", os.path.join(input_dir, "missing.jsonl"), "--out", output_dir]) == 2


@pytest.mark.asyncio
async def test_curate_writes_outputs(temp_dirs):
    input_dir, output_dir = temp_dirs
    path = os.path.join(input_dir, "tracklets.jsonl")
    with open(path, "w") as f:
        for frame in range(10):
            row = {"frame_index": frame, "track_id": 0, "bbox": [0.1, 0.1, 0.5, 0.5], "behaviour_label": "drinking"}
            f.write(json.dumps(row) + "\n")

    assert await main(["curate", path, "--out", output_dir, "--set", "curation.clip_len=10"]) == 0

    with open(os.path.join(output_dir, "report.jsonl")) as f:
        rows = [json.loads(line) for line in f]
    assert [r["accepted"] for r in rows] == [True]


@pytest.mark.asyncio
async def test_inspect_tokens_flags_ruminating(temp_dirs, capsys):
    _, output_dir = temp_dirs

    assert await main(["inspect-tokens", "--out", output_dir]) == 0

    with open(os.path.join(output_dir, "tokens.jsonl")) as f:
        rows = [json.loads(line) for line in f]
    flagged = {r["word"] for r in rows if r["flagged"]}
    assert flagged == {"ruminating"}
    assert "ruminating" in capsys.readouterr().out

    assert await main(["inspect-tokens", "--remap", "--out", output_dir]) == 0
    with open(os.path.join(output_dir, "tokens.jsonl")) as f:
        assert not any(json.loads(line)["flagged"] for line in f)


@pytest.mark.asyncio
async def test_eval_writes_report_for_split(temp_dirs):
    input_dir, output_dir = temp_dirs
    await _synth(input_dir)
    checkpoint = os.path.join(input_dir, "model.pt")
    save_checkpoint(checkpoint, CattleClip(ModelConfig()), ["feeding"])

    code = await main(["eval", checkpoint, os.path.join(input_dir, "manifest.jsonl"), "--split", "test", "--out", output_dir])

    assert code == 0
    with open(os.path.join(output_dir, "report.test.json")) as f:
        report = json.load(f)
    assert report["provenance"]["split"] == "test"
    assert sum(report["support"]) == 2
    assert os.path.exists(os.path.join(output_dir, "manifest.split.jsonl"))


@pytest.mark.asyncio
async def test_eval_rejects_checkpoint_of_another_architecture(temp_dirs):
    input_dir, output_dir = temp_dirs
    await _synth(input_dir)
    checkpoint = os.path.join(input_dir, "model.pt")
    save_checkpoint(checkpoint, CattleClip(ModelConfig(projection_dim=8)), ["feeding"])

    assert await main(["eval", checkpoint, os.path.join(input_dir, "manifest.jsonl"), "--out", output_dir]) == 2


@pytest.mark.asyncio
async def test_train_records_ablation_and_provenance(temp_dirs):
    input_dir, output_dir = temp_dirs
    await _synth(input_dir)
    args = ["train", os.path.join(input_dir, "manifest.jsonl"), "--out", output_dir, "--no-aug"]
    args += ["--set", "training.total_epochs=2", "--set", "training.warmup_epochs=1"]

    assert await main(args) == 0

    with open(os.path.join(output_dir, "report.json")) as f:
        provenance = json.load(f)["provenance"]
    assert provenance["ablation_row"] == "vanilla+text prompts"
    assert provenance["split"] == "test"
    assert provenance["checkpoint_id"]
    with open(os.path.join(output_dir, "history.jsonl")) as f:
        assert len(f.read().splitlines()) == 2
    assert os.path.exists(os.path.join(output_dir, "report.txt"))


@pytest.mark.asyncio
async def test_train_rejects_vocab_beyond_text_embedding(temp_dirs):
    input_dir, output_dir = temp_dirs
    await _synth(input_dir)
    args = ["train", os.path.join(input_dir, "manifest.jsonl"), "--out", output_dir, "--set", "model.vocab_size=32"]
    assert await main(args) == 1
    assert not os.path.exists(os.path.join(output_dir, "checkpoint.pt"))


@pytest.mark.asyncio
async def test_stray_value_error_maps_to_data_exit_code(temp_dirs, monkeypatch):
    _, output_dir = temp_dirs

    async def failing_synth(config, out_dir):
        raise ValueError("cannot reshape array of size 0")

    monkeypatch.setattr("cattle_clip.cli.cmd_synth", failing_synth)
    assert await main(["synth", "--out", output_dir]) == 2
