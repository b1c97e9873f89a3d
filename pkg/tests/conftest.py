import numpy as np
import pytest
import torch

from dataset.netpbm import ImageFile, save_image
from sensing.matrix import generate_matrix


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow end-to-end tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)


@pytest.fixture(scope="session")
def phi_25():
    return generate_matrix(272, seed=42)


@pytest.fixture(scope="session")
def phi_full():
    return generate_matrix(1089, seed=3)


def smooth_plane(height, width, seed=0):
    """Natural-looking test content: a few low-frequency waves plus mild texture, in [0,1]."""
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:height, 0:width] / 16.0
    plane = 0.5 + 0.2 * np.sin(rows + rng.uniform(0, 3)) * np.cos(0.7 * cols + rng.uniform(0, 3))
    plane += 0.05 * rng.standard_normal((height, width))
    return np.clip(plane, 0.0, 1.0)


def image_from_plane(plane):
    samples = np.round(np.asarray(plane) * 255).astype(np.uint8)
    if samples.ndim == 2:
        samples = samples[:, :, None]
    return ImageFile(samples.shape[1], samples.shape[0], samples.shape[2], samples)


@pytest.fixture
def write_image(tmp_path):
    def write(name, plane):
        path = tmp_path / name
        save_image(str(path), image_from_plane(plane))
        return str(path)
    return write


# same layer pattern as ReconNet, scaled down to 9x9 blocks
SMALL_LAYERS = ((3, 4, True), (1, 3, True), (3, 1, True), (3, 4, True), (1, 3, True), (3, 1, False))


def small_model(init="random", seed=1):
    from reconnet.model import build_model
    phi = generate_matrix(20, 81, seed=7)
    return build_model(20, init, phi, seed=seed, conv_std=0.4, fc_std=0.3, layers=SMALL_LAYERS, block_size=9,
                       dtype=torch.float64)


def small_batch(count=3, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((count, 20)), rng.uniform(0, 1, (count, 81))
