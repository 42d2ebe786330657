import tempfile

import pytest
import pytest_asyncio

from cattle_clip.data import SynthConfig, generate_synthetic_dataset, split_dataset
from cattle_clip.model import CattleClip, ModelConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long protocol tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long protocol runs, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest_asyncio.fixture
async def temp_dirs():
    """Create temporary input and output directories"""
    with tempfile.TemporaryDirectory() as input_dir, tempfile.TemporaryDirectory() as output_dir:
        yield input_dir, output_dir


@pytest_asyncio.fixture
async def small_dataset(temp_dirs):
    """A split synthetic dataset with 4 clips per category"""
    input_dir, _ = temp_dirs
    manifest = await generate_synthetic_dataset(SynthConfig(clips_per_category=4, num_frames=8), input_dir)
    return input_dir, split_dataset(manifest, seed=0)


@pytest.fixture
def desk_model():
    return CattleClip(ModelConfig(), seed=0)
