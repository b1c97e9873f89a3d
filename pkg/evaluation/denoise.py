"""Denoisers applied to the intermediate reconstruction, driven by a sigma estimate in 8-bit units."""
import logging
import math
import shlex
import subprocess
from dataclasses import dataclass
from typing import Callable

import numpy as np
import torch
from skimage.restoration import denoise_nl_means
from torchvision.transforms import functional as TF

from dataset.netpbm import decode_netpbm, encode_netpbm, luminance, to_image_file
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

BUILTIN_DENOISERS = ("identity", "gaussian", "nlmeans")
EXTERNAL_PREFIX = "external:"


@dataclass
class DenoiserPlugin:
    name: str
    function: Callable[[np.ndarray, float], np.ndarray]

    def __call__(self, plane, sigma):
        plane = np.asarray(plane, dtype=np.float64)
        out = np.asarray(self.function(plane, float(sigma)), dtype=np.float64)
        if out.shape != plane.shape:
            raise ConfigurationError("denoiser '{}' changed dimensions {} -> {}".format(
                self.name, plane.shape, out.shape))
        return np.clip(out, 0.0, 1.0)


def _identity(plane, sigma):
    return plane.copy()


def _gaussian(plane, sigma):
    blur = sigma / 20.0
    if blur < 0.3:
        return plane.copy()
    kernel = 2 * int(math.ceil(3 * blur)) + 1
    # reflect padding needs the half-width to stay inside the plane
    limit = 2 * min(plane.shape) - 1
    kernel = min(kernel, limit if limit % 2 == 1 else limit - 1)
    if kernel < 3:
        return plane.copy()
    tensor = torch.from_numpy(plane[None, :, :].copy())
    return TF.gaussian_blur(tensor, [kernel, kernel], [blur, blur])[0].numpy()


def _nlmeans(plane, sigma):
    noise = sigma / 255.0
    if noise <= 0:
        return plane.copy()
    return denoise_nl_means(plane, patch_size=5, patch_distance=6, h=0.8 * noise, sigma=noise, fast_mode=True)


def external_denoiser(command):
    """Subprocess protocol: PGM on stdin, sigma as the last argument, PGM on stdout."""
    argv = shlex.split(command)
    if not argv:
        raise ConfigurationError("external denoiser needs a command")

    def run(plane, sigma):
        payload = encode_netpbm(to_image_file(plane))
        result = subprocess.run(argv + ["{:.6g}".format(sigma)], input=payload, stdout=subprocess.PIPE,
                                stderr=subprocess.PIPE, check=True)
        return luminance(decode_netpbm(result.stdout, argv[0]))

    return DenoiserPlugin(EXTERNAL_PREFIX + command, run)


def get_denoiser(name):
    if name.startswith(EXTERNAL_PREFIX):
        return external_denoiser(name[len(EXTERNAL_PREFIX):])
    functions = {"identity": _identity, "gaussian": _gaussian, "nlmeans": _nlmeans}
    if name not in functions:
        raise ConfigurationError("unknown denoiser '{}', expected one of {} or '{}<command>'".format(
            name, BUILTIN_DENOISERS, EXTERNAL_PREFIX))
    return DenoiserPlugin(name, functions[name])
