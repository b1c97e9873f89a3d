import math

import numpy as np

from utils.errors import ConfigurationError

PSNR_CAP = 100.0


def quantize_8bit(plane):
    return np.round(np.clip(np.asarray(plane, dtype=np.float64), 0.0, 1.0) * 255.0)


def psnr(reference, candidate, cap=PSNR_CAP):
    """PSNR in dB on 8-bit re-quantized planes, peak 255; exact matches return ``cap``."""
    reference = np.asarray(reference)
    candidate = np.asarray(candidate)
    if reference.shape != candidate.shape:
        raise ValueError("psnr needs identical dimensions, got {} and {}".format(reference.shape, candidate.shape))
    mse = float(np.mean((quantize_8bit(reference) - quantize_8bit(candidate)) ** 2))
    if mse == 0:
        return cap
    return min(cap, 10.0 * math.log10(255.0 ** 2 / mse))


def image_psnr(reference, candidate, cap=PSNR_CAP):
    """Mean of per-plane PSNRs for (H, W) or (H, W, C) images."""
    reference = np.asarray(reference)
    candidate = np.asarray(candidate)
    if reference.ndim == 2:
        return psnr(reference, candidate, cap)
    if reference.shape != candidate.shape:
        raise ValueError("psnr needs identical dimensions, got {} and {}".format(reference.shape, candidate.shape))
    return float(np.mean([psnr(reference[:, :, c], candidate[:, :, c], cap) for c in range(reference.shape[2])]))


def estimate_sigma(measurements, blocks, phi):
    """Median over blocks of sqrt(||y_i - Phi x_i||^2 / m), in 8-bit pixel units."""
    vectors = np.asarray(blocks, dtype=np.float64).reshape(len(blocks), -1)
    if len(vectors) != len(measurements.measurements):
        raise ConfigurationError("{} reconstructed blocks for {} measurement vectors".format(
            len(vectors), len(measurements.measurements)))
    if len(vectors) == 0:
        return 0.0
    residual = measurements.measurements - vectors @ phi.entries.T
    per_block = np.sqrt(np.sum(residual ** 2, axis=1) / phi.m)
    return 255.0 * float(np.median(per_block))
