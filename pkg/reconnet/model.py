"""ReconNet: one fully connected layer to a 33x33 map followed by six same-size convolutions."""
import logging
import struct
from dataclasses import dataclass, field
from typing import List

import numpy as np
import torch

from numerics.layers import ConvLayer, FcLayer, conv2d_batch, fc_batch
from sensing.matrix import BLOCK_SIZE
from utils.errors import ConfigurationError, FormatError
from utils.util import BinaryReader

logger = logging.getLogger(__name__)

# (kernel_size, out_channels, apply_relu) for conv1..conv6
RECONNET_LAYERS = ((11, 64, True), (1, 32, True), (7, 1, True), (11, 64, True), (1, 32, True), (7, 1, False))
INIT_MODES = ("random", "deterministic")
RNET_MAGIC = b"RNET"
RNET_VERSION = 1


@dataclass
class ReconNetModel:
    m: int
    fc: FcLayer
    convs: List[ConvLayer]
    matrix_seed: int = 0
    init_mode: str = "random"
    steps: int = 0
    block_size: int = BLOCK_SIZE
    layers: tuple = field(default=RECONNET_LAYERS)

    def __post_init__(self):
        if self.init_mode not in INIT_MODES:
            raise ValueError("init mode must be one of {}, got '{}'".format(INIT_MODES, self.init_mode))
        if len(self.convs) != len(self.layers):
            raise ConfigurationError("expected {} conv layers, got {}".format(len(self.layers), len(self.convs)))
        if self.fc.in_dim != self.m or self.fc.side != self.block_size:
            raise ConfigurationError("fc layer maps {} -> {}x{}, model needs {} -> {}x{}".format(
                self.fc.in_dim, self.fc.side, self.fc.side, self.m, self.block_size, self.block_size))
        in_channels = 1
        for index, (conv, (kernel, out_channels, apply_relu)) in enumerate(zip(self.convs, self.layers)):
            if (conv.kernel_size, conv.in_channels, conv.out_channels, conv.apply_relu) != \
                    (kernel, in_channels, out_channels, apply_relu):
                raise ConfigurationError("conv{} is {}x{} {}->{} relu={}, architecture needs {}x{} {}->{} relu={}".format(
                    index + 1, conv.kernel_size, conv.kernel_size, conv.in_channels, conv.out_channels,
                    conv.apply_relu, kernel, kernel, in_channels, out_channels, apply_relu))
            in_channels = out_channels
        if in_channels != 1:
            raise ConfigurationError("last conv layer must produce a single map")

    @property
    def dtype(self):
        return self.fc.weights.dtype

    def layer_names(self):
        return ["fc"] + ["conv{}".format(i + 1) for i in range(len(self.convs))]

    def named_layers(self):
        return list(zip(self.layer_names(), [self.fc] + list(self.convs)))

    def parameters(self):
        """Weight and bias tensors in file order: fc, conv1..conv6."""
        params = []
        for _, layer in self.named_layers():
            params.extend([layer.weights, layer.biases])
        return params


def parameter_count(model):
    return sum(p.numel() for p in model.parameters())


def build_model(m, init="random", phi=None, seed=0, conv_std=0.01, fc_std=0.01,
                layers=RECONNET_LAYERS, block_size=BLOCK_SIZE, dtype=torch.float32):
    """Seeded ReconNet; deterministic init copies Phi^T into the fc weights."""
    if init not in INIT_MODES:
        raise ValueError("init mode must be one of {}, got '{}'".format(INIT_MODES, init))
    n = block_size * block_size
    if init == "deterministic":
        if phi is None:
            raise ValueError("deterministic initialization needs the measurement matrix")
        if phi.m != m or phi.n != n:
            raise ValueError("matrix is {}x{}, model needs {}x{}".format(phi.m, phi.n, m, n))

    generator = torch.Generator().manual_seed(int(seed))
    convs = []
    in_channels = 1
    for kernel, out_channels, apply_relu in layers:
        # draws are made in float64 so both precisions share the same weights
        weights = torch.randn((out_channels, in_channels, kernel, kernel), generator=generator,
                              dtype=torch.float64) * conv_std
        convs.append(ConvLayer(weights.to(dtype), torch.zeros(out_channels, dtype=dtype), apply_relu))
        in_channels = out_channels
    if init == "deterministic":
        fc_weights = torch.from_numpy(np.ascontiguousarray(phi.entries.T))
    else:
        fc_weights = torch.randn((n, m), generator=generator, dtype=torch.float64) * fc_std
    fc = FcLayer(fc_weights.to(dtype), torch.zeros(n, dtype=dtype), side=block_size)
    matrix_seed = phi.seed if phi is not None else 0
    return ReconNetModel(m, fc, convs, matrix_seed, init, 0, block_size, tuple(layers))


def forward(model, measurements, tape=None, method="im2col"):
    """(N, m) measurements -> (N, 1, side, side) reconstructions, recording onto ``tape``."""
    y = torch.as_tensor(measurements, dtype=model.dtype)
    if y.dim() != 2 or y.shape[1] != model.m:
        raise ConfigurationError("measurements have shape {}, model expects (N, {})".format(
            tuple(y.shape), model.m))
    x = fc_batch(y, model.fc)
    if tape is not None:
        tape.record("fc", model.fc, y, x)
    for name, conv in model.named_layers()[1:]:
        out = conv2d_batch(x, conv, method)
        if tape is not None:
            tape.record(name, conv, x, out)
        x = out
    return x


def infer_blocks(model, measurements, batch_size=256, method="im2col"):
    measurements = np.asarray(measurements, dtype=np.float64)
    side = model.block_size
    out = np.empty((len(measurements), side, side))
    with torch.no_grad():
        for start in range(0, len(measurements), batch_size):
            batch = forward(model, measurements[start:start + batch_size], method=method)
            out[start:start + batch_size] = batch[:, 0].to(torch.float64).numpy()
    return out


def infer_block(model, y, method="im2col"):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) != model.m:
        raise ValueError("measurement vector has length {}, model expects {}".format(len(y), model.m))
    return infer_blocks(model, y[None, :], method=method)[0]


def _is_standard(model):
    return tuple(model.layers) == RECONNET_LAYERS and model.block_size == BLOCK_SIZE


def save_model(model, path):
    if not _is_standard(model):
        raise ValueError("RNET files only hold the standard 33x33 ReconNet architecture")
    with open(path, "wb") as f:
        f.write(RNET_MAGIC)
        f.write(struct.pack("<IIQBQ", RNET_VERSION, model.m, model.matrix_seed,
                            INIT_MODES.index(model.init_mode), model.steps))
        for _, layer in model.named_layers():
            for tensor in (layer.weights, layer.biases):
                values = tensor.detach().to(torch.float32).numpy().reshape(-1)
                f.write(struct.pack("<I", values.size))
                f.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def _read_tensor(reader, name, part, shape):
    field_name = "{}.{}".format(name, part)
    at = reader.offset
    count = reader.unpack("I", field_name + ".count")
    expected = int(np.prod(shape))
    if count != expected:
        raise FormatError("{}: {} has {} values, architecture needs {}".format(
            reader.name, field_name, count, expected), offset=at, field=field_name)
    values = reader.array("f4", count, field_name).reshape(shape)
    return torch.from_numpy(values.astype(np.float32))


def load_model(path):
    with open(path, "rb") as f:
        reader = BinaryReader(f.read(), str(path))
    reader.expect_magic(RNET_MAGIC)
    version = reader.unpack("I", "version")
    if version != RNET_VERSION:
        raise FormatError("{}: unsupported RNET version {}".format(path, version), offset=4, field="version")
    m = reader.unpack("I", "m")
    matrix_seed = reader.unpack("Q", "matrix_seed")
    mode = reader.unpack("B", "init_mode")
    steps = reader.unpack("Q", "steps")
    if not 1 <= m <= BLOCK_SIZE * BLOCK_SIZE:
        raise FormatError("{}: invalid measurement count {}".format(path, m), offset=8, field="m")
    if mode >= len(INIT_MODES):
        raise FormatError("{}: unknown init mode {}".format(path, mode), offset=20, field="init_mode")

    n = BLOCK_SIZE * BLOCK_SIZE
    fc = FcLayer(_read_tensor(reader, "fc", "weights", (n, m)), _read_tensor(reader, "fc", "biases", (n,)))
    convs = []
    in_channels = 1
    for index, (kernel, out_channels, apply_relu) in enumerate(RECONNET_LAYERS):
        name = "conv{}".format(index + 1)
        weights = _read_tensor(reader, name, "weights", (out_channels, in_channels, kernel, kernel))
        biases = _read_tensor(reader, name, "biases", (out_channels,))
        convs.append(ConvLayer(weights, biases, apply_relu))
        in_channels = out_channels
    reader.expect_end()
    logger.debug("loaded model %s: m=%d, %d steps", path, m, steps)
    return ReconNetModel(m, fc, convs, matrix_seed, INIT_MODES[mode], steps)
