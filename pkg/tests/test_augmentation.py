from fractions import Fraction

import numpy as np
import pytest

from cattle_clip.augmentation import (
    AugConfig,
    ClipTransform,
    apply_clip_transform,
    apply_train_augs,
    fill_geometry,
    fill_to_aspect,
    preprocess_stack,
    resize,
)
from cattle_clip.data import FrameStack
from cattle_clip.errors import ConfigError


def _stack(K=3, height=12, width=20, seed=0):
    frames = np.random.default_rng(seed).random((K, height, width, 3)).astype(np.float32)
    return FrameStack(frames=frames, source_indices=np.arange(K))


def test_fill_pads_wide_frame_to_square():
    frame = np.ones((50, 100, 3), dtype=np.float32)

    padded = fill_to_aspect(frame, Fraction(1, 1))

    assert padded.shape == (100, 100, 3)
    assert np.all(padded[:25] == 0.0)
    assert np.all(padded[75:] == 0.0)
    assert np.all(padded[25:75] == 1.0)


def test_fill_geometry_camera_frame():
    assert fill_geometry(360, 640, Fraction(1, 1)) == (640, 640, 140, 0)


def test_fill_keeps_frames_already_at_target_aspect():
    frame = np.random.default_rng(0).random((8, 8, 3)).astype(np.float32)
    assert np.array_equal(fill_to_aspect(frame, Fraction(1, 1)), frame)


def test_fill_uses_configured_colour():
    frame = np.zeros((2, 4, 3), dtype=np.float32)
    padded = fill_to_aspect(frame, Fraction(1, 1), (0.5, 0.25, 1.0))
    assert padded.shape == (4, 4, 3)
    assert np.allclose(padded[0, 0], [0.5, 0.25, 1.0])


def test_fill_geometry_random_sizes():
    """The padded frame has exactly the target aspect and contains the original block"""
    rng = np.random.default_rng(0)
    for _ in range(200):
        height, width = (int(v) for v in rng.integers(1, 400, size=2))
        aspect = Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 10)))
        new_h, new_w, top, left = fill_geometry(height, width, aspect)
        assert Fraction(new_w, new_h) == aspect
        assert new_h >= height and new_w >= width
        assert 0 <= top and top + height <= new_h
        assert 0 <= left and left + width <= new_w
        assert new_h - height - top - top in (0, 1)


def test_fill_geometry_pads_one_axis_when_reachable():
    rng = np.random.default_rng(1)
    for _ in range(200):
        height, width = (int(v) for v in rng.integers(1, 400, size=2))
        aspect = Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 10)))
        p, q = aspect.numerator, aspect.denominator
        new_h, new_w, _, _ = fill_geometry(height, width, aspect)
        if Fraction(width, height) <= aspect and height % q == 0:
            assert new_h == height
        if Fraction(width, height) >= aspect and width % p == 0:
            assert new_w == width
    assert fill_geometry(100, 50, Fraction(1, 1))[:2] == (100, 100)
    assert fill_geometry(90, 100, Fraction(4, 3))[:2] == (90, 120)
    assert fill_geometry(90, 160, Fraction(4, 3))[:2] == (120, 160)

def test_resize_keeps_corner_pixels():
    frame = np.zeros((2, 2, 3), dtype=np.float32)
    frame[0, 0] = 0.1
    frame[0, 1] = 0.4
    frame[1, 0] = 0.7
    frame[1, 1] = 1.0

    out = resize(frame, (4, 4))

    assert out.shape == (4, 4, 3)
    assert np.allclose(out[0, 0], 0.1)
    assert np.allclose(out[0, -1], 0.4)
    assert np.allclose(out[-1, 0], 0.7)
    assert np.allclose(out[-1, -1], 1.0)


def test_preprocess_output_shape_and_range():
    config = AugConfig(target_size=(16, 16))
    out = preprocess_stack(_stack(), config)
    assert out.frames.shape == (3, 16, 16, 3)
    assert 0.0 <= out.frames.min() and out.frames.max() <= 1.0


def test_preprocess_is_deterministic():
    config = AugConfig(target_size=(16, 16))
    first = preprocess_stack(_stack(), config)
    second = preprocess_stack(_stack(), config)
    assert first.frames.tobytes() == second.frames.tobytes()


def test_double_flip_is_identity():
    frames = _stack().frames
    flip = ClipTransform(flip=True, brightness=1.0, contrast=1.0, saturation=1.0, grayscale=False)

    twice = apply_clip_transform(apply_clip_transform(frames, flip), flip)

    assert np.allclose(twice, frames)


def test_grayscale_makes_channels_equal():
    transform = ClipTransform(flip=False, brightness=1.0, contrast=1.0, saturation=1.0, grayscale=True)
    out = apply_clip_transform(_stack().frames, transform)
    assert np.allclose(out[..., 0], out[..., 1], atol=1e-6)
    assert np.allclose(out[..., 1], out[..., 2], atol=1e-6)


def test_one_draw_is_shared_by_all_frames():
    """Identical input frames stay identical after augmentation"""
    frame = np.random.default_rng(3).random((12, 20, 3)).astype(np.float32)
    stack = FrameStack(frames=np.stack([frame] * 4), source_indices=np.arange(4))
    config = AugConfig(target_size=(16, 16), flip_prob=0.5, grayscale_prob=0.5)

    for seed in range(10):
        out = apply_train_augs(stack, config, np.random.default_rng(seed))
        for k in range(1, 4):
            assert np.array_equal(out.frames[0], out.frames[k])


def test_train_augs_are_reproducible_under_seed():
    config = AugConfig(target_size=(16, 16))
    first = apply_train_augs(_stack(), config, np.random.default_rng(5))
    second = apply_train_augs(_stack(), config, np.random.default_rng(5))
    assert np.array_equal(first.frames, second.frames)


def test_disabled_augs_equal_preprocessing():
    config = AugConfig(target_size=(16, 16), enabled=False)
    out = apply_train_augs(_stack(), config, np.random.default_rng(0))
    assert np.array_equal(out.frames, preprocess_stack(_stack(), config).frames)


def test_invalid_probabilities_are_rejected():
    with pytest.raises(ConfigError):
        AugConfig(flip_prob=1.5)
    with pytest.raises(ConfigError):
        AugConfig(target_size=(0, 16))
    with pytest.raises(ConfigError):
        AugConfig().target_aspect
