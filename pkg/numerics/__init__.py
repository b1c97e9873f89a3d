from numerics.layers import (ConvLayer, FcLayer, Tensor3, conv2d_backward, conv2d_batch, conv2d_forward,
                             fc_backward, fc_batch, fc_forward, relu, relu_batch)
from numerics.tape import GradientTape, Gradients, LayerGradient, backward
