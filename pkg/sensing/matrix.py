"""Measurement matrices: seeded Gaussian rows orthonormalized by modified Gram-Schmidt."""
import logging
import math
import struct
from dataclasses import dataclass

import numpy as np

from utils.errors import FormatError
from utils.util import BinaryReader, make_rng

logger = logging.getLogger(__name__)

BLOCK_SIZE = 33
BLOCK_DIM = BLOCK_SIZE * BLOCK_SIZE
PHIM_MAGIC = b"PHIM"
PHIM_VERSION = 1

# published measurement counts for 33x33 blocks; floor() gives 108 at MR 0.10
STANDARD_COUNTS = {0.25: 272, 0.10: 109, 0.04: 43, 0.01: 10}


@dataclass
class MeasurementMatrix:
    """m x n operator with its generation provenance."""
    entries: np.ndarray
    seed: int
    quantized: bool = False

    def __post_init__(self):
        if self.entries.ndim != 2:
            raise ValueError("measurement matrix must be 2-D, got shape {}".format(self.entries.shape))
        if self.m > self.n:
            raise ValueError("measurement matrix has m={} > n={}".format(self.m, self.n))

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.entries.shape[1]

    def orthonormality_residual(self):
        gram = self.entries @ self.entries.T
        return float(np.max(np.abs(gram - np.eye(self.m))))


def measurements_for_rate(n, mr):
    if not 0 < mr <= 1:
        raise ValueError("measurement rate must lie in (0, 1], got {}".format(mr))
    if n == BLOCK_DIM:
        for rate, count in STANDARD_COUNTS.items():
            if math.isclose(mr, rate, rel_tol=1e-9):
                return count
    return max(1, int(math.floor(mr * n + 1e-9)))


def _modified_gram_schmidt(rows):
    q = rows.copy()
    for k in range(q.shape[0]):
        norm = np.linalg.norm(q[k])
        if norm == 0:
            raise ValueError("rank-deficient Gaussian draw at row {}".format(k))
        q[k] /= norm
        if k + 1 < q.shape[0]:
            q[k + 1:] -= np.outer(q[k + 1:] @ q[k], q[k])
    return q


def generate_matrix(m, n=BLOCK_DIM, seed=0):
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n, got m={}, n={}".format(m, n))
    gaussian = make_rng(seed).standard_normal((m, n))
    entries = _modified_gram_schmidt(gaussian)
    phi = MeasurementMatrix(entries, seed=int(seed), quantized=False)
    residual = phi.orthonormality_residual()
    if residual > 1e-10:
        # second pass restores orthogonality lost to rounding on ill-conditioned draws
        phi = MeasurementMatrix(_modified_gram_schmidt(entries), seed=int(seed), quantized=False)
        residual = phi.orthonormality_residual()
    logger.debug("generated %dx%d matrix (seed %d), residual %.3e", m, n, seed, residual)
    return phi


def quantize_matrix_8bit(phi):
    """Symmetric signed 8-bit quantization with one scale for the whole matrix."""
    if phi.quantized:
        raise ValueError("matrix is already quantized")
    peak = float(np.max(np.abs(phi.entries)))
    if peak == 0:
        raise ValueError("cannot quantize an all-zero matrix")
    scale = peak / 127.0
    levels = np.clip(np.round(phi.entries / scale), -127, 127)
    return MeasurementMatrix(levels * scale, seed=phi.seed, quantized=True)


def save_matrix(phi, path):
    header = PHIM_MAGIC + struct.pack("<IIIQB", PHIM_VERSION, phi.m, phi.n, phi.seed, int(phi.quantized))
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(phi.entries, dtype="<f8").tobytes())


def load_matrix(path):
    with open(path, "rb") as f:
        reader = BinaryReader(f.read(), str(path))
    reader.expect_magic(PHIM_MAGIC)
    version = reader.unpack("I", "version")
    if version != PHIM_VERSION:
        raise FormatError("{}: unsupported PHIM version {}".format(path, version), offset=4, field="version")
    m = reader.unpack("I", "m")
    n = reader.unpack("I", "n")
    seed = reader.unpack("Q", "seed")
    quantized = reader.unpack("B", "quantized")
    if m < 1 or n < 1 or m > n:
        raise FormatError("{}: invalid dimensions m={}, n={}".format(path, m, n), offset=8, field="m")
    entries = reader.array("f8", m * n, "entries").reshape(m, n).astype(np.float64)
    reader.expect_end()
    return MeasurementMatrix(entries, seed=seed, quantized=bool(quantized))
