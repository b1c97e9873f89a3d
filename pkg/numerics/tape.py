from dataclasses import dataclass
from typing import List, Union

import torch

from numerics.layers import ConvLayer, FcLayer, Tensor3, conv2d_backward, fc_backward
from utils.errors import StateError


@dataclass
class TapeEntry:
    name: str
    layer: Union[ConvLayer, FcLayer]
    inputs: torch.Tensor
    outputs: torch.Tensor


@dataclass
class LayerGradient:
    name: str
    weights: torch.Tensor
    biases: torch.Tensor


@dataclass
class Gradients:
    layers: List[LayerGradient]
    inputs: torch.Tensor

    def __iter__(self):
        return iter(self.layers)

    def __getitem__(self, index):
        return self.layers[index]


class GradientTape(object):
    """Activations cached by one forward pass; replayed once by ``backward``."""

    def __init__(self, method="im2col"):
        self.method = method
        self.entries = []
        self.consumed = False

    def record(self, name, layer, inputs, outputs):
        if self.consumed:
            raise StateError("tape was already consumed by backward; record a fresh forward pass")
        self.entries.append(TapeEntry(name, layer, inputs, outputs))

    def __len__(self):
        return len(self.entries)


def backward(loss_grad, tape):
    """Exact gradients of a scalar loss for every recorded layer, in forward order.

    ``loss_grad`` is dL/d(output of the last recorded layer), either a Tensor3 for
    a single sample or an (N, C, H, W) batch.
    """
    if tape.consumed:
        raise StateError("backward called twice on the same tape")
    if not tape.entries:
        raise StateError("backward called before any forward pass was recorded")
    tape.consumed = True

    grad = loss_grad.to_batch() if isinstance(loss_grad, Tensor3) else loss_grad
    grads = []
    for entry in reversed(tape.entries):
        layer = entry.layer
        if isinstance(layer, FcLayer):
            grad, grad_w, grad_b = fc_backward(entry.inputs, grad, layer)
        else:
            if layer.apply_relu:
                # subgradient of ReLU at exactly 0 is 0
                grad = grad * (entry.outputs > 0).to(grad.dtype)
            grad, grad_w, grad_b = conv2d_backward(entry.inputs, grad, layer, tape.method)
        grads.append(LayerGradient(entry.name, grad_w, grad_b))
    grads.reverse()
    tape.entries = []
    return Gradients(grads, grad)
