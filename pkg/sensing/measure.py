import struct
from dataclasses import dataclass

import numpy as np

from utils.errors import ConfigurationError, FormatError
from utils.util import BinaryReader, make_rng

MSET_MAGIC = b"MSET"
MSET_VERSION = 1


@dataclass
class MeasurementSet:
    """Per-block measurement vectors and the matrix they were taken with."""
    measurements: np.ndarray
    noise_sigma: float
    matrix_seed: int
    m: int
    quantized: bool = False
    height: int = 0
    width: int = 0

    def __post_init__(self):
        if self.measurements.ndim != 2 or self.measurements.shape[1] != self.m:
            raise ValueError("measurements must have shape (blocks, {}), got {}".format(
                self.m, self.measurements.shape))
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0, got {}".format(self.noise_sigma))

    def __len__(self):
        return len(self.measurements)


def sense_vectors(phi, vectors):
    """Noiseless y = Phi x for a stack of row-major block vectors."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.shape[-1] != phi.n:
        raise ConfigurationError("block vectors have length {}, matrix expects {}".format(
            vectors.shape[-1], phi.n))
    return vectors @ phi.entries.T


def sense(phi, grid, noise_sigma=0.0, seed=0):
    """y = Phi vec(x) + e per block; block i draws its noise from seed XOR i."""
    if phi.n != grid.block_size ** 2:
        raise ConfigurationError("matrix has n={}, blocks hold {} pixels".format(phi.n, grid.block_size ** 2))
    if noise_sigma < 0:
        raise ValueError("noise sigma must be >= 0, got {}".format(noise_sigma))
    measurements = sense_vectors(phi, grid.vectors())
    if noise_sigma > 0:
        std = noise_sigma / 255.0
        for index in range(len(measurements)):
            measurements[index] += std * make_rng(int(seed) ^ index).standard_normal(phi.m)
    return MeasurementSet(measurements, float(noise_sigma), phi.seed, phi.m, phi.quantized,
                          grid.height, grid.width)


def save_measurements(mset, path):
    header = MSET_MAGIC + struct.pack("<IIIQBdII", MSET_VERSION, len(mset), mset.m, mset.matrix_seed,
                                      int(mset.quantized), mset.noise_sigma, mset.height, mset.width)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(mset.measurements, dtype="<f8").tobytes())


def load_measurements(path):
    with open(path, "rb") as f:
        reader = BinaryReader(f.read(), str(path))
    reader.expect_magic(MSET_MAGIC)
    version = reader.unpack("I", "version")
    if version != MSET_VERSION:
        raise FormatError("{}: unsupported MSET version {}".format(path, version), offset=4, field="version")
    count = reader.unpack("I", "count")
    m = reader.unpack("I", "m")
    seed = reader.unpack("Q", "matrix_seed")
    quantized = reader.unpack("B", "quantized")
    sigma = reader.unpack("d", "noise_sigma")
    height = reader.unpack("I", "height")
    width = reader.unpack("I", "width")
    values = reader.array("f8", count * m, "measurements").reshape(count, m).astype(np.float64)
    reader.expect_end()
    return MeasurementSet(values, sigma, seed, m, bool(quantized), height, width)
