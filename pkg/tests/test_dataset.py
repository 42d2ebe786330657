import json
import os

import numpy as np
import pytest

from cattle_clip.data import (
    DEFAULT_CATEGORIES,
    ClipRecord,
    ClipStore,
    Manifest,
    SynthConfig,
    archetype_statistics,
    derive_rng,
    generate_synthetic_dataset,
    load_manifest,
    sample_frames,
    sample_indices,
    split_dataset,
    write_manifest,
)
from cattle_clip.data.manifest import split_sizes
from cattle_clip.data.synthetic import GENERATOR_MARGIN
from cattle_clip.errors import DataError


def _records(count, label="feeding"):
    return [ClipRecord(f"c{i}", f"clips/c{i}.npy", label, 10, 5.0) for i in range(count)]


def _write_lines(path, rows):
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")


@pytest.mark.asyncio
async def test_load_manifest_three_lines(temp_dirs):
    """Three valid lines give three records in file order"""
    input_dir, _ = temp_dirs
    path = os.path.join(input_dir, "manifest.jsonl")
    _write_lines(path, [r.to_dict() for r in _records(3)])

    manifest = await load_manifest(path)

    assert [r.clip_id for r in manifest.records] == ["c0", "c1", "c2"]
    assert manifest.categories == DEFAULT_CATEGORIES


@pytest.mark.asyncio
async def test_load_manifest_duplicate_id_names_the_id(temp_dirs):
    input_dir, _ = temp_dirs
    path = os.path.join(input_dir, "manifest.jsonl")
    rows = [r.to_dict() for r in _records(2)]
    rows[1]["clip_id"] = "c0"
    _write_lines(path, rows)

    with pytest.raises(DataError, match="c0"):
        await load_manifest(path)


@pytest.mark.asyncio
async def test_load_manifest_empty_file(temp_dirs):
    input_dir, _ = temp_dirs
    path = os.path.join(input_dir, "manifest.jsonl")
    open(path, "w").close()

    manifest = await load_manifest(path)

    assert len(manifest) == 0
    assert manifest.categories == DEFAULT_CATEGORIES


@pytest.mark.asyncio
async def test_load_manifest_errors_carry_line_numbers(temp_dirs):
    input_dir, _ = temp_dirs
    path = os.path.join(input_dir, "manifest.jsonl")
    rows = [r.to_dict() for r in _records(2)]
    rows[1]["label"] = "sleeping"
    _write_lines(path, rows)

    with pytest.raises(DataError, match=r"manifest.jsonl:2: unknown label"):
        await load_manifest(path)

    with open(path, "w") as f:
        f.write(json.dumps(_records(1)[0].to_dict()) + "\n{not json\n")
    with pytest.raises(DataError, match=r":2: malformed JSON"):
        await load_manifest(path)


@pytest.mark.asyncio
async def test_load_manifest_missing_file():
    with pytest.raises(FileNotFoundError):
        await load_manifest("/path/that/does/not/exist.jsonl")


@pytest.mark.asyncio
async def test_manifest_header_round_trips_categories(temp_dirs):
    _, output_dir = temp_dirs
    manifest = Manifest(records=_records(2, "a"), categories=("a", "b"))

    path = await write_manifest(manifest, output_dir)

    loaded = await load_manifest(path)
    assert loaded.categories == ("a", "b")
    assert loaded.records == manifest.records


@pytest.mark.parametrize(
    "total,expected",
    [(1905, (1143, 381, 381)), (10, (6, 2, 2)), (7, (5, 1, 1)), (0, (0, 0, 0))],
)
def test_split_sizes(total, expected):
    assert split_sizes(total, (0.6, 0.2, 0.2)) == expected


def test_split_dataset_is_a_seeded_partition():
    """Every record lands in exactly one split and the assignment is reproducible"""
    manifest = Manifest(records=_records(1905))

    first = split_dataset(manifest, seed=3)
    second = split_dataset(manifest, seed=3)

    assert [r.split for r in first.records] == [r.split for r in second.records]
    assert [len(first.split(s)) for s in ("train", "val", "test")] == [1143, 381, 381]
    assert first.is_split
    assert split_dataset(manifest, seed=4).records != first.records


def test_split_dataset_rejects_bad_ratios_and_assigned_records():
    manifest = Manifest(records=_records(10))
    with pytest.raises(DataError):
        split_dataset(manifest, ratios=(0.5, 0.2, 0.2))
    with pytest.raises(DataError):
        split_dataset(split_dataset(manifest, seed=0), seed=0)


def test_sample_indices_examples():
    rng = np.random.default_rng(0)
    picked = sample_indices(50, 8, rng)
    assert len(picked) == 8
    assert np.all(np.diff(picked) > 0)
    assert picked.min() >= 0 and picked.max() < 50

    assert sample_indices(8, 8, rng).tolist() == list(range(8))
    assert sample_indices(5, 8, rng).tolist() == [0, 0, 1, 1, 2, 2, 3, 4]


def test_sample_indices_property_over_random_pairs():
    rng = np.random.default_rng(1)
    for _ in range(300):
        num_frames = int(rng.integers(1, 60))
        K = int(rng.integers(1, 16))
        picked = sample_indices(num_frames, K, rng)
        assert len(picked) == K
        assert np.all(np.diff(picked) >= 0)
        assert picked.min() >= 0 and picked.max() < num_frames
        if num_frames >= K:
            assert len(set(picked.tolist())) == K


def test_fresh_rng_per_epoch_changes_the_subset():
    subsets = {tuple(sample_indices(50, 8, derive_rng(0, epoch, "clip"))) for epoch in range(5)}
    assert len(subsets) > 1
    assert tuple(sample_indices(50, 8, derive_rng(0, 2, "clip"))) == tuple(
        sample_indices(50, 8, derive_rng(0, 2, "clip"))
    )


def test_sample_frames_takes_the_picked_frames():
    frames = np.stack([np.full((4, 4, 3), i / 10, dtype=np.float32) for i in range(10)])
    record = ClipRecord("c", "x.npy", "feeding", 10, 5.0)

    stack = sample_frames(record, frames, 4, np.random.default_rng(0))

    assert stack.K == 4
    for frame, index in zip(stack.frames, stack.source_indices):
        assert np.all(frame == np.float32(index / 10))


@pytest.mark.asyncio
async def test_synthetic_dataset_counts_and_store(temp_dirs):
    _, output_dir = temp_dirs
    manifest = await generate_synthetic_dataset(SynthConfig(clips_per_category=20), output_dir)

    assert len(manifest) == 120
    assert os.path.exists(os.path.join(output_dir, "manifest.jsonl"))
    store = await ClipStore(output_dir).load(manifest.records[:6])
    frames = store.frames(manifest.records[0].clip_id)
    assert frames.shape == (20, 24, 32, 3)
    assert 0.0 <= frames.min() and frames.max() <= 1.0


@pytest.mark.asyncio
async def test_synthetic_dataset_is_byte_identical_under_seed(temp_dirs):
    input_dir, output_dir = temp_dirs
    config = SynthConfig(clips_per_category=2, seed=7)
    first = await generate_synthetic_dataset(config, input_dir)
    await generate_synthetic_dataset(config, output_dir)

    for record in first.records:
        with open(os.path.join(input_dir, record.frame_source), "rb") as a:
            with open(os.path.join(output_dir, record.frame_source), "rb") as b:
                assert a.read() == b.read()


@pytest.mark.asyncio
async def test_synthetic_categories_are_separable(temp_dirs):
    """Category means differ by more than the generator margin in some statistic"""
    _, output_dir = temp_dirs
    manifest = await generate_synthetic_dataset(SynthConfig(clips_per_category=5), output_dir)
    store = await ClipStore(output_dir).load(manifest.records)
    means = {}
    for category in manifest.categories:
        stats = [archetype_statistics(store.frames(r.clip_id)) for r in manifest.records if r.label == category]
        means[category] = np.mean(stats, axis=0)

    for i, a in enumerate(manifest.categories):
        for b in manifest.categories[i + 1 :]:
            assert np.max(np.abs(means[a] - means[b])) > GENERATOR_MARGIN, (a, b)


@pytest.mark.asyncio
async def test_clip_store_reads_image_directories(temp_dirs):
    from PIL import Image

    input_dir, _ = temp_dirs
    clip_dir = os.path.join(input_dir, "clip")
    os.makedirs(clip_dir)
    for i in range(3):
        Image.fromarray(np.full((6, 8, 3), 50 * i, dtype=np.uint8)).save(os.path.join(clip_dir, f"{i:03d}.png"))
    record = ClipRecord("clip", "clip", "feeding", 3, 5.0)

    store = await ClipStore(input_dir).load([record])

    frames = store.frames("clip")
    assert frames.shape == (3, 6, 8, 3)
    assert np.allclose(frames[:, 0, 0, 0], [0.0, 50 / 255, 100 / 255])


@pytest.mark.asyncio
async def test_clip_store_missing_source(temp_dirs):
    input_dir, _ = temp_dirs
    with pytest.raises(DataError, match="not found"):
        await ClipStore(input_dir).load([ClipRecord("gone", "gone.npy", "feeding", 3, 5.0)])
