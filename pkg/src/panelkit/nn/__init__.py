from . import layers, losses, optim, tensor
from .tensor import Tensor, backward

__all__ = ["Tensor", "backward", "tensor", "layers", "losses", "optim"]
