from dataclasses import dataclass

import numpy as np

from sensing.matrix import BLOCK_SIZE


@dataclass
class BlockGrid:
    """Non-overlapping blocks of an edge-padded plane, in raster order."""
    height: int
    width: int
    padded_height: int
    padded_width: int
    blocks: np.ndarray
    block_size: int = BLOCK_SIZE
    pad_mode: str = "edge"

    @property
    def rows(self):
        return self.padded_height // self.block_size

    @property
    def cols(self):
        return self.padded_width // self.block_size

    def vectors(self):
        """Row-major vectorization of every block, shape (count, block_size**2)."""
        return self.blocks.reshape(len(self.blocks), -1)

    def with_blocks(self, blocks):
        blocks = np.asarray(blocks, dtype=np.float64).reshape(-1, self.block_size, self.block_size)
        return BlockGrid(self.height, self.width, self.padded_height, self.padded_width,
                         blocks, self.block_size, self.pad_mode)


def split_blocks(image, block_size=BLOCK_SIZE):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or min(image.shape) < 1:
        raise ValueError("split_blocks expects a non-empty 2-D plane, got shape {}".format(image.shape))
    height, width = image.shape
    padded_height = -(-height // block_size) * block_size
    padded_width = -(-width // block_size) * block_size
    padded = np.pad(image, ((0, padded_height - height), (0, padded_width - width)), mode="edge")
    rows, cols = padded_height // block_size, padded_width // block_size
    blocks = padded.reshape(rows, block_size, cols, block_size).transpose(0, 2, 1, 3)
    return BlockGrid(height, width, padded_height, padded_width,
                     blocks.reshape(rows * cols, block_size, block_size).copy(), block_size)


def assemble_blocks(grid):
    size = grid.block_size
    expected = grid.rows * grid.cols
    if len(grid.blocks) != expected:
        raise ValueError("grid geometry needs {} blocks, got {}".format(expected, len(grid.blocks)))
    blocks = np.asarray(grid.blocks, dtype=np.float64).reshape(grid.rows, grid.cols, size, size)
    plane = blocks.transpose(0, 2, 1, 3).reshape(grid.padded_height, grid.padded_width)
    return np.clip(plane[:grid.height, :grid.width], 0.0, 1.0)
