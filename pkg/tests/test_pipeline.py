import numpy as np
import pytest

from baseline.ista import IstaConfig
from conftest import image_from_plane, smooth_plane
from evaluation.metrics import image_psnr
from evaluation.pipeline import (as_float_image, backproject_method, ista_method, make_method, reconnet_method,
                                 reconstruct_image, reconstruct_measurements)
from reconnet.model import build_model
from sensing.blocks import split_blocks
from sensing.matrix import generate_matrix
from sensing.measure import sense
from utils.errors import ConfigurationError


def test_full_rate_backprojection_is_lossless(phi_full):
    image = image_from_plane(smooth_plane(40, 50))
    result = reconstruct_image(image, phi_full, backproject_method(phi_full))
    assert result.intermediate.shape == (40, 50)
    assert image_psnr(as_float_image(image), result.intermediate) == 100.0
    assert result.sigma_estimates[0] == pytest.approx(0.0, abs=1e-6)
    assert result.seconds >= 0.0


def test_color_images_are_recovered_per_channel(phi_25):
    planes = np.stack([smooth_plane(35, 35, seed=s) for s in range(3)], axis=2)
    result = reconstruct_image(image_from_plane(planes), phi_25, backproject_method(phi_25), denoiser="gaussian")
    assert result.intermediate.shape == result.denoised.shape == (35, 35, 3)
    assert len(result.sigma_estimates) == 3


def test_noise_lowers_psnr(phi_full):
    plane = smooth_plane(66, 66)
    method = backproject_method(phi_full)
    clean = image_psnr(plane, reconstruct_image(plane, phi_full, method).intermediate)
    noisy = image_psnr(plane, reconstruct_image(plane, phi_full, method, noise_sigma=30.0, seed=1).intermediate)
    assert noisy < clean


def test_reconstruction_is_deterministic(phi_25):
    plane = smooth_plane(40, 40)
    method = ista_method(phi_25, IstaConfig(max_iters=20))
    a = reconstruct_image(plane, phi_25, method, noise_sigma=10.0, seed=3)
    b = reconstruct_image(plane, phi_25, method, noise_sigma=10.0, seed=3)
    np.testing.assert_array_equal(a.denoised, b.denoised)


def test_stored_measurements_reproduce_the_image_path(phi_25):
    plane = smooth_plane(50, 45)
    method = backproject_method(phi_25)
    direct = reconstruct_image(plane, phi_25, method)
    stored = reconstruct_measurements([sense(phi_25, split_blocks(plane))], phi_25, method)
    np.testing.assert_array_equal(stored.intermediate, direct.intermediate)


def test_reconnet_model_must_match_matrix(phi_25):
    model = build_model(43, "random", generate_matrix(43, seed=0))
    with pytest.raises(ConfigurationError):
        reconstruct_image(smooth_plane(33, 33), phi_25, reconnet_method(model))


def test_reconnet_method_produces_blocks(phi_25):
    model = build_model(272, "deterministic", phi_25, seed=0)
    result = reconstruct_image(smooth_plane(40, 40), phi_25, reconnet_method(model))
    assert result.intermediate.shape == (40, 40)
    assert np.all((result.intermediate >= 0) & (result.intermediate <= 1))


def test_make_method_errors(phi_25):
    with pytest.raises(ConfigurationError):
        make_method("reconnet", phi_25)
    with pytest.raises(ConfigurationError):
        make_method("tval3", phi_25)
    assert make_method("backproject", phi_25).name == "backproject"


def test_stored_measurements_must_match_geometry(phi_25):
    mset = sense(phi_25, split_blocks(smooth_plane(40, 40)))
    mset.height = 80
    with pytest.raises(ConfigurationError):
        reconstruct_measurements([mset], phi_25, backproject_method(phi_25))


def test_stored_and_image_paths_share_denoising_and_sigma(phi_25):
    plane = smooth_plane(50, 45, seed=2)
    method = backproject_method(phi_25)
    direct = reconstruct_image(plane, phi_25, method, noise_sigma=20.0, denoiser="gaussian", seed=6)
    stored = reconstruct_measurements([sense(phi_25, split_blocks(plane), 20.0, 6)], phi_25, method, "gaussian")
    np.testing.assert_array_equal(stored.denoised, direct.denoised)
    assert stored.sigma_estimates == direct.sigma_estimates
    assert stored.seconds >= 0.0


def test_ista_beats_backprojection_on_a_random_image(phi_25):
    plane = np.random.default_rng(0).uniform(size=(66, 66))
    ista = reconstruct_image(plane, phi_25, ista_method(phi_25)).intermediate
    backprojected = reconstruct_image(plane, phi_25, backproject_method(phi_25)).intermediate
    assert image_psnr(plane, ista) > image_psnr(plane, backprojected)


def _fastest(plane, phi, method, repeats=2):
    return min(reconstruct_image(plane, phi, method).seconds for _ in range(repeats))


@pytest.mark.slow
def test_reconnet_time_is_rate_independent_and_beats_fista(phi_25):
    plane = smooth_plane(256, 256)
    phi_low = generate_matrix(10, seed=1)
    high = _fastest(plane, phi_25, reconnet_method(build_model(272, "random", phi_25, seed=0)))
    low = _fastest(plane, phi_low, reconnet_method(build_model(10, "random", phi_low, seed=0)))
    assert max(high, low) < 3 * min(high, low)
    fista = _fastest(plane, phi_25, ista_method(phi_25), repeats=1)
    assert fista >= 10 * high
