"""Classical recovery: backprojection and l1-regularized least squares in a 2-D DCT basis.

Solves  min_x  1/2 ||y - Phi x||^2 + lambda ||Psi x||_1  by proximal gradient steps
(ISTA), optionally with FISTA momentum and lambda continuation.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.fft import dctn, idctn

from sensing.matrix import BLOCK_SIZE
from utils.errors import ConfigurationError, SolverError

logger = logging.getLogger(__name__)


class DctBasis(object):
    """Orthonormal 2-D DCT-II over side x side blocks, acting on row-major vectors."""

    def __init__(self, side=BLOCK_SIZE):
        self.side = side

    def forward(self, x):
        return dctn(np.reshape(x, (self.side, self.side)), type=2, norm="ortho").reshape(-1)

    def inverse(self, coefficients):
        return idctn(np.reshape(coefficients, (self.side, self.side)), type=2, norm="ortho").reshape(-1)


@dataclass
class IstaConfig:
    lam: float = 1e-4
    max_iters: int = 2000
    tolerance: float = 1e-6
    accelerated: bool = True
    step: float = 1.0
    # start at 0.1 max|Psi Phi^T y| and halve every `halve_every` iterations down to lam
    continuation: bool = True
    halve_every: int = 50

    def validate(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0, got {}".format(self.lam))
        if not 0 < self.step <= 1:
            raise ValueError("step must lie in (0, 1] for an orthonormal-row matrix, got {}".format(self.step))
        if self.max_iters < 1 or not self.tolerance > 0:
            raise ValueError("need max_iters >= 1 and tolerance > 0")
        return self


class IstaResult(NamedTuple):
    x: np.ndarray
    iterations: int


def soft_threshold(v, t):
    if t < 0:
        raise ValueError("threshold must be >= 0, got {}".format(t))
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _check_measurements(phi, y):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) != phi.m:
        raise ConfigurationError("measurement vector has length {}, matrix has m={}".format(len(y), phi.m))
    return y


def backproject(phi, y):
    """Least-norm estimate Phi^T y (exact pseudo-inverse for orthonormal rows)."""
    return phi.entries.T @ _check_measurements(phi, y)


def objective(phi, y, x, lam, basis=None):
    basis = basis or DctBasis(int(round(math.sqrt(phi.n))))
    residual = _check_measurements(phi, y) - phi.entries @ x
    return 0.5 * float(residual @ residual) + lam * float(np.abs(basis.forward(x)).sum())


def ista_recover(phi, y, config=None, basis=None):
    config = (config or IstaConfig()).validate()
    basis = basis or DctBasis(int(round(math.sqrt(phi.n))))
    y = _check_measurements(phi, y)
    A = phi.entries
    x = A.T @ y
    lam_start = 0.1 * float(np.max(np.abs(basis.forward(x)))) if config.continuation else config.lam
    z = x.copy()
    t = 1.0
    iterations = 0
    for k in range(config.max_iters):
        lam = max(config.lam, lam_start * 0.5 ** (k // config.halve_every)) if config.continuation else config.lam
        point = z if config.accelerated else x
        gradient_step = point + config.step * (A.T @ (y - A @ point))
        x_new = basis.inverse(soft_threshold(basis.forward(gradient_step), config.step * lam))
        if not np.all(np.isfinite(x_new)):
            raise SolverError("non-finite iterate at iteration {}".format(k + 1))
        if config.accelerated:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        change = np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-12)
        x = x_new
        iterations = k + 1
        if change < config.tolerance and lam <= config.lam:
            break
    logger.debug("ista stopped after %d iterations", iterations)
    return IstaResult(x, iterations)


def recover_blocks(phi, measurements, config=None, threads=1):
    """ISTA on every row of ``measurements``; result order follows the input order."""
    basis = DctBasis(int(round(math.sqrt(phi.n))))
    rows = list(np.asarray(measurements, dtype=np.float64))

    def solve(y):
        return ista_recover(phi, y, config, basis).x

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.stack(list(pool.map(solve, rows)))
    return np.stack([solve(y) for y in rows]) if rows else np.empty((0, phi.n))
