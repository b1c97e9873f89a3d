import logging
import os
import struct
from dataclasses import dataclass

import numpy as np

from dataset.netpbm import load_image, luminance
from sensing.matrix import BLOCK_DIM, BLOCK_SIZE
from sensing.measure import sense_vectors
from utils.errors import ConfigurationError, FormatError
from utils.util import BinaryReader, make_rng

logger = logging.getLogger(__name__)

DSET_MAGIC = b"DSET"
SPLITS = ("train", "validation")


@dataclass
class PatchDataset:
    """(y, x) pairs: y = Phi x, x a row-major 33x33 luminance patch in [0,1]."""
    inputs: np.ndarray
    labels: np.ndarray
    matrix_seed: int
    m: int
    split_tag: str = "train"

    def __post_init__(self):
        if self.split_tag not in SPLITS:
            raise ValueError("split tag must be one of {}, got '{}'".format(SPLITS, self.split_tag))
        self.inputs = np.asarray(self.inputs, dtype=np.float64).reshape(-1, self.m)
        self.labels = np.asarray(self.labels, dtype=np.float64).reshape(-1, BLOCK_DIM)
        if len(self.inputs) != len(self.labels):
            raise ValueError("{} inputs but {} labels".format(len(self.inputs), len(self.labels)))

    def __len__(self):
        return len(self.labels)

    def subset(self, indices):
        return PatchDataset(self.inputs[indices], self.labels[indices], self.matrix_seed, self.m, self.split_tag)


def read_manifest(path):
    base = os.path.dirname(os.path.abspath(path))
    paths = []
    with open(path, "r") as manifest:
        for line in manifest:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            paths.append(line if os.path.isabs(line) else os.path.join(base, line))
    return paths


def load_planes(paths):
    return [luminance(load_image(path)) for path in paths]


def extract_patches(planes, size=BLOCK_SIZE, stride=14):
    if not planes:
        raise ValueError("extract_patches needs at least one plane")
    patches = []
    for index, plane in enumerate(planes):
        height, width = plane.shape
        if height < size or width < size:
            logger.warning("skipping plane %d: %dx%d is smaller than a %dx%d patch", index, height, width, size, size)
            continue
        for top in range(0, height - size + 1, stride):
            for left in range(0, width - size + 1, stride):
                patches.append(plane[top:top + size, left:left + size].reshape(-1))
    if not patches:
        return np.empty((0, size * size))
    return np.stack(patches).astype(np.float64)


def build_dataset(patches, phi, validation_fraction=0.1, seed=0):
    if phi.n != BLOCK_DIM:
        raise ConfigurationError("matrix has n={}, patches hold {} pixels".format(phi.n, BLOCK_DIM))
    if not 0 <= validation_fraction <= 0.5:
        raise ValueError("validation fraction must lie in [0, 0.5], got {}".format(validation_fraction))
    patches = np.asarray(patches, dtype=np.float64).reshape(-1, BLOCK_DIM)
    measurements = sense_vectors(phi, patches)
    order = make_rng(seed).permutation(len(patches))
    n_val = int(round(validation_fraction * len(patches)))
    val_idx = np.sort(order[:n_val])
    train_idx = np.sort(order[n_val:])
    train = PatchDataset(measurements[train_idx], patches[train_idx], phi.seed, phi.m, "train")
    val = PatchDataset(measurements[val_idx], patches[val_idx], phi.seed, phi.m, "validation")
    logger.info("dataset: %d train / %d validation records at m=%d", len(train), len(val), phi.m)
    return train, val


def save_dataset(dataset, path):
    """DSET cache: per record 1089 float32 labels then m float32 inputs."""
    records = np.concatenate([dataset.labels, dataset.inputs], axis=1).astype("<f4")
    with open(path, "wb") as f:
        f.write(DSET_MAGIC + struct.pack("<IQI", dataset.m, dataset.matrix_seed, len(dataset)))
        f.write(np.ascontiguousarray(records).tobytes())


def load_dataset(path, split_tag="train"):
    with open(path, "rb") as f:
        reader = BinaryReader(f.read(), str(path))
    reader.expect_magic(DSET_MAGIC)
    m = reader.unpack("I", "m")
    seed = reader.unpack("Q", "matrix_seed")
    count = reader.unpack("I", "count")
    if m < 1:
        raise FormatError("{}: m must be positive".format(path), offset=4, field="m")
    records = reader.array("f4", count * (BLOCK_DIM + m), "records").reshape(count, BLOCK_DIM + m)
    reader.expect_end()
    return PatchDataset(records[:, BLOCK_DIM:], records[:, :BLOCK_DIM], seed, m, split_tag)
