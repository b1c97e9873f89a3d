"""Block CS image recovery: split -> sense -> per-block recovery -> assemble -> denoise."""
import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from baseline.ista import IstaConfig, recover_blocks
from dataset.netpbm import ImageFile
from evaluation.denoise import get_denoiser
from evaluation.metrics import estimate_sigma
from reconnet.model import infer_blocks
from sensing.blocks import BlockGrid, assemble_blocks, split_blocks
from sensing.measure import sense
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

METHODS = ("reconnet", "ista", "backproject")


@dataclass
class RecoveryMethod:
    """Maps a (blocks, m) measurement stack to (blocks, n) row-major block vectors."""
    name: str
    recover: Callable[[np.ndarray], np.ndarray]
    m: Optional[int] = None


@dataclass
class ReconstructionResult:
    intermediate: np.ndarray
    denoised: np.ndarray
    sigma_estimates: List[float]
    seconds: float


def reconnet_method(model, conv_method="im2col"):
    def recover(measurements):
        return infer_blocks(model, measurements, method=conv_method).reshape(len(measurements), -1)
    return RecoveryMethod("reconnet", recover, model.m)


def ista_method(phi, config=None, threads=1):
    config = config or IstaConfig()
    return RecoveryMethod("ista", lambda measurements: recover_blocks(phi, measurements, config, threads))


def backproject_method(phi):
    return RecoveryMethod("backproject", lambda measurements: np.asarray(measurements) @ phi.entries)


def make_method(name, phi, model=None, ista_config=None, threads=1, conv_method="im2col"):
    if name == "reconnet":
        if model is None:
            raise ConfigurationError("method 'reconnet' needs a trained model")
        return reconnet_method(model, conv_method)
    if name == "ista":
        return ista_method(phi, ista_config, threads)
    if name == "backproject":
        return backproject_method(phi)
    raise ConfigurationError("unknown method '{}', expected one of {}".format(name, METHODS))


def _planes(image):
    if isinstance(image, ImageFile):
        image = image.samples.astype(np.float64) / 255.0
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return [image]
    if image.ndim == 3:
        return [image[:, :, c] for c in range(image.shape[2])]
    raise ValueError("expected an (H, W) or (H, W, C) image, got shape {}".format(image.shape))


def _stack(planes):
    return planes[0] if len(planes) == 1 else np.stack(planes, axis=2)


def _check_method(phi, method):
    if method.m is not None and method.m != phi.m:
        raise ConfigurationError("model expects m={} measurements, matrix has m={}".format(method.m, phi.m))


def _finish(grid, measurements, blocks, phi, denoiser, start):
    """Assemble, estimate sigma and denoise one channel; the returned time stops after assembly."""
    intermediate = assemble_blocks(grid.with_blocks(blocks))
    seconds = time.perf_counter() - start
    sigma = estimate_sigma(measurements, blocks, phi)
    return intermediate, denoiser(intermediate, sigma), sigma, seconds


def _recover_channels(channels, phi, method, denoiser):
    """``channels`` yields (grid, measurements) pairs, one per colour plane."""
    intermediates, denoised, sigmas = [], [], []
    seconds = 0.0
    for channel, (grid, measurements) in enumerate(channels):
        start = time.perf_counter()
        blocks = method.recover(measurements.measurements)
        intermediate, final, sigma, elapsed = _finish(grid, measurements, blocks, phi, denoiser, start)
        intermediates.append(intermediate)
        denoised.append(final)
        sigmas.append(sigma)
        seconds += elapsed
        logger.debug("channel %d: %d blocks, sigma estimate %.3f", channel, len(blocks), sigma)
    return ReconstructionResult(_stack(intermediates), _stack(denoised), sigmas, seconds)


def _resolve_denoiser(denoiser):
    if isinstance(denoiser, str) or denoiser is None:
        return get_denoiser(denoiser or "identity")
    return denoiser


def reconstruct_image(image, phi, method, noise_sigma=0.0, denoiser=None, seed=0):
    """Recover every channel of ``image`` with the same method; timing covers recovery and assembly only."""
    _check_method(phi, method)
    denoiser = _resolve_denoiser(denoiser)
    side = int(round(phi.n ** 0.5))

    def channels():
        for channel, plane in enumerate(_planes(image)):
            grid = split_blocks(plane, side)
            yield grid, sense(phi, grid, noise_sigma, seed + (channel << 32))

    return _recover_channels(channels(), phi, method, denoiser)


def _grid_for(measurements, side):
    padded_height = -(-measurements.height // side) * side
    padded_width = -(-measurements.width // side) * side
    count = (padded_height // side) * (padded_width // side)
    if count != len(measurements):
        raise ConfigurationError("{}x{} image needs {} blocks, file holds {}".format(
            measurements.height, measurements.width, count, len(measurements)))
    return BlockGrid(measurements.height, measurements.width, padded_height, padded_width,
                     np.zeros((count, side, side)), side)


def reconstruct_measurements(measurement_sets, phi, method, denoiser=None):
    """Recover an image from stored measurements alone (one set per channel)."""
    _check_method(phi, method)
    denoiser = _resolve_denoiser(denoiser)
    measurement_sets = list(measurement_sets)
    side = int(round(phi.n ** 0.5))
    for measurements in measurement_sets:
        if measurements.m != phi.m:
            raise ConfigurationError("measurements have m={}, matrix has m={}".format(measurements.m, phi.m))
    grids = [_grid_for(measurements, side) for measurements in measurement_sets]
    return _recover_channels(zip(grids, measurement_sets), phi, method, denoiser)


def as_float_image(image):
    """(H, W) plane for single-channel input, (H, W, C) otherwise, values in [0,1]."""
    return _stack(_planes(image))
