import math

import numpy as np
import pytest

from evaluation.metrics import PSNR_CAP, estimate_sigma, image_psnr, psnr, quantize_8bit
from sensing.blocks import split_blocks
from sensing.measure import sense


def test_identical_images_hit_the_cap():
    plane = np.random.default_rng(0).uniform(size=(20, 30))
    assert psnr(plane, plane) == PSNR_CAP == 100.0
    # differences below half a gray level vanish after re-quantization
    assert psnr(plane, quantize_8bit(plane) / 255.0) == PSNR_CAP


def test_one_gray_level_everywhere():
    reference = np.zeros((8, 8))
    assert psnr(reference, reference + 1 / 255.0) == pytest.approx(10 * math.log10(255.0 ** 2))
    assert psnr(reference, reference + 1 / 255.0) == pytest.approx(48.1308, abs=1e-4)


def test_psnr_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ValueError):
        image_psnr(np.zeros((4, 4, 3)), np.zeros((4, 4, 1)))


def test_color_psnr_is_mean_over_planes():
    reference = np.zeros((6, 6, 3))
    candidate = reference.copy()
    candidate[:, :, 0] += 1 / 255.0
    expected = (10 * math.log10(255.0 ** 2) + 100.0 + 100.0) / 3
    assert image_psnr(reference, candidate) == pytest.approx(expected)


def test_sigma_estimate_zero_for_exact_blocks(phi_25):
    grid = split_blocks(np.random.default_rng(1).uniform(size=(66, 66)))
    assert estimate_sigma(sense(phi_25, grid), grid.blocks, phi_25) == pytest.approx(0.0, abs=1e-9)


def test_sigma_estimate_tracks_measurement_noise(phi_25):
    grid = split_blocks(np.random.default_rng(2).uniform(size=(132, 132)))
    noisy = sense(phi_25, grid, noise_sigma=20.0, seed=5)
    assert estimate_sigma(noisy, grid.blocks, phi_25) == pytest.approx(20.0, rel=0.1)
