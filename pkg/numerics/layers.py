"""Dense feature maps and the three layer primitives ReconNet is built from.

Layers work on batched channel-first tensors ``(N, C, H, W)`` internally; the
single-sample API speaks ``Tensor3`` whose data is laid out (row, column, channel).
"""
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from utils.errors import ConfigurationError

CONV_METHODS = ("direct", "im2col")
# samples per unfold call, bounds the im2col buffer of the 7x7x32 layer
IM2COL_CHUNK = 32


@dataclass
class Tensor3:
    """H x W x C real feature map."""
    data: torch.Tensor

    def __post_init__(self):
        if self.data.dim() != 3:
            raise ValueError("Tensor3 expects a (height, width, channels) tensor, got shape {}".format(
                tuple(self.data.shape)))
        if min(self.data.shape) < 1:
            raise ValueError("Tensor3 dimensions must be positive, got {}".format(tuple(self.data.shape)))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    def to_batch(self):
        return self.data.permute(2, 0, 1).unsqueeze(0).contiguous()

    @classmethod
    def from_batch(cls, batch, index=0):
        return cls(batch[index].permute(1, 2, 0).contiguous())


@dataclass
class ConvLayer:
    """Same-size convolution; weights are (out_channels, in_channels, k, k)."""
    weights: torch.Tensor
    biases: torch.Tensor
    apply_relu: bool = True

    def __post_init__(self):
        if self.weights.dim() != 4 or self.weights.shape[2] != self.weights.shape[3]:
            raise ValueError("conv weights must be (out, in, k, k), got {}".format(tuple(self.weights.shape)))
        if self.kernel_size % 2 != 1:
            raise ValueError("conv kernel size must be odd, got {}".format(self.kernel_size))
        if self.biases.shape != (self.out_channels,):
            raise ValueError("conv biases must have length {}, got {}".format(
                self.out_channels, tuple(self.biases.shape)))

    @property
    def kernel_size(self):
        return self.weights.shape[2]

    @property
    def in_channels(self):
        return self.weights.shape[1]

    @property
    def out_channels(self):
        return self.weights.shape[0]

    @property
    def padding(self):
        return (self.kernel_size - 1) // 2


@dataclass
class FcLayer:
    """Fully connected layer from m measurements to a side x side map."""
    weights: torch.Tensor
    biases: torch.Tensor
    side: int = 33

    def __post_init__(self):
        if self.weights.dim() != 2:
            raise ValueError("fc weights must be (out, in), got {}".format(tuple(self.weights.shape)))
        if self.out_dim != self.side * self.side:
            raise ValueError("fc output size {} is not {}x{}".format(self.out_dim, self.side, self.side))
        if self.biases.shape != (self.out_dim,):
            raise ValueError("fc biases must have length {}, got {}".format(self.out_dim, tuple(self.biases.shape)))

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]


def _conv_direct(x, weights, biases):
    n, _, h, w = x.shape
    k = weights.shape[2]
    pad = (k - 1) // 2
    padded = F.pad(x, (pad, pad, pad, pad))
    out = biases.view(1, -1, 1, 1).expand(n, -1, h, w).clone()
    for dy in range(k):
        for dx in range(k):
            window = padded[:, :, dy:dy + h, dx:dx + w]
            out += torch.einsum("oc,nchw->nohw", weights[:, :, dy, dx], window)
    return out


def _conv_im2col(x, weights, biases):
    n, _, h, w = x.shape
    out_c, _, k, _ = weights.shape
    pad = (k - 1) // 2
    kernel = weights.reshape(out_c, -1)
    out = x.new_empty((n, out_c, h * w))
    for start in range(0, n, IM2COL_CHUNK):
        cols = F.unfold(x[start:start + IM2COL_CHUNK], k, padding=pad)
        out[start:start + IM2COL_CHUNK] = torch.matmul(kernel, cols)
    out += biases.view(1, -1, 1)
    return out.view(n, out_c, h, w)


def conv2d_batch(x, layer, method="im2col"):
    """Convolution + optional ReLU on an (N, C, H, W) batch."""
    if x.shape[1] != layer.in_channels:
        raise ConfigurationError("conv input has {} channels, layer expects {}".format(
            x.shape[1], layer.in_channels))
    if method == "direct":
        out = _conv_direct(x, layer.weights, layer.biases)
    elif method == "im2col":
        out = _conv_im2col(x, layer.weights, layer.biases)
    else:
        raise ValueError("unknown conv method '{}', expected one of {}".format(method, CONV_METHODS))
    return relu_batch(out) if layer.apply_relu else out


def fc_batch(y, layer):
    """(N, m) measurements -> (N, 1, side, side) maps, row-major reshape."""
    if y.shape[1] != layer.in_dim:
        raise ConfigurationError("fc input has length {}, layer expects {}".format(y.shape[1], layer.in_dim))
    out = torch.addmm(layer.biases, y, layer.weights.t())
    return out.view(-1, 1, layer.side, layer.side)


def relu_batch(x):
    return torch.clamp(x, min=0)


def conv2d_forward(input, layer, method="im2col"):
    return Tensor3.from_batch(conv2d_batch(input.to_batch(), layer, method))


def fc_forward(input, layer):
    vector = torch.as_tensor(input, dtype=layer.weights.dtype).reshape(1, -1)
    if vector.shape[1] != layer.in_dim:
        raise ConfigurationError("fc input has length {}, layer expects {}".format(vector.shape[1], layer.in_dim))
    return Tensor3.from_batch(fc_batch(vector, layer))


def relu(input):
    return Tensor3(relu_batch(input.data))


def conv2d_backward(x, grad_out, layer, method="im2col"):
    """Gradients of a same-size convolution w.r.t. (input, weights, biases).

    ``grad_out`` is the gradient with respect to the pre-activation output.
    """
    n, _, h, w = x.shape
    out_c, in_c, k, _ = layer.weights.shape
    pad = layer.padding
    grad_b = grad_out.sum(dim=(0, 2, 3))
    if method == "direct":
        padded = F.pad(x, (pad, pad, pad, pad))
        grad_w = torch.zeros_like(layer.weights)
        grad_padded = torch.zeros_like(padded)
        for dy in range(k):
            for dx in range(k):
                window = padded[:, :, dy:dy + h, dx:dx + w]
                grad_w[:, :, dy, dx] = torch.einsum("nohw,nchw->oc", grad_out, window)
                grad_padded[:, :, dy:dy + h, dx:dx + w] += torch.einsum(
                    "oc,nohw->nchw", layer.weights[:, :, dy, dx], grad_out)
        grad_x = grad_padded[:, :, pad:pad + h, pad:pad + w].contiguous()
        return grad_x, grad_w, grad_b
    if method != "im2col":
        raise ValueError("unknown conv method '{}', expected one of {}".format(method, CONV_METHODS))
    kernel = layer.weights.reshape(out_c, -1)
    g = grad_out.reshape(n, out_c, h * w)
    grad_kernel = torch.zeros_like(kernel)
    grad_x = torch.empty_like(x)
    for start in range(0, n, IM2COL_CHUNK):
        stop = start + IM2COL_CHUNK
        cols = F.unfold(x[start:stop], k, padding=pad)
        grad_kernel += torch.matmul(g[start:stop], cols.transpose(1, 2)).sum(dim=0)
        grad_cols = torch.matmul(kernel.t(), g[start:stop])
        grad_x[start:stop] = F.fold(grad_cols, (h, w), k, padding=pad)
    return grad_x, grad_kernel.view(out_c, in_c, k, k), grad_b


def fc_backward(y, grad_out, layer):
    g = grad_out.reshape(grad_out.shape[0], -1)
    grad_w = torch.matmul(g.t(), y)
    grad_b = g.sum(dim=0)
    grad_y = torch.matmul(g, layer.weights)
    return grad_y, grad_w, grad_b
