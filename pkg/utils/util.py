import logging
import struct

import numpy as np

from utils.errors import FormatError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(verbose=False):
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)


def make_rng(seed):
    """numpy Generator on PCG64, bit-identical across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


class Averager(object):
    """Running mean of per-sample losses, weighted by batch size."""

    def __init__(self):
        self.reset()

    def add(self, value, count=1):
        self.n_count += count
        self.sum += float(value) * count

    def reset(self):
        self.n_count = 0
        self.sum = 0.0

    def val(self):
        res = 0.0
        if self.n_count != 0:
            res = self.sum / float(self.n_count)
        return res


class BinaryReader(object):
    """Little-endian cursor over a byte buffer that reports where decoding failed."""

    def __init__(self, data, name):
        self.data = data
        self.name = name
        self.offset = 0

    def unpack(self, fmt, field):
        fmt = "<" + fmt
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise FormatError("{}: truncated file".format(self.name), offset=self.offset, field=field)
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values if len(values) > 1 else values[0]

    def array(self, dtype, count, field):
        dtype = np.dtype(dtype).newbyteorder("<")
        size = dtype.itemsize * count
        if self.offset + size > len(self.data):
            raise FormatError("{}: truncated payload".format(self.name), offset=self.offset, field=field)
        values = np.frombuffer(self.data, dtype=dtype, count=count, offset=self.offset)
        self.offset += size
        return values

    def expect_magic(self, magic):
        found = self.data[:len(magic)]
        if found != magic:
            raise FormatError("{}: bad magic {!r}, expected {!r}".format(self.name, found, magic),
                              offset=0, field="magic")
        self.offset = len(magic)

    def expect_end(self):
        if self.offset != len(self.data):
            raise FormatError("{}: {} trailing bytes".format(self.name, len(self.data) - self.offset),
                              offset=self.offset, field="payload")
