"""Scalar training losses, all mean-reduced."""

from __future__ import annotations

from ..errors import ShapeMismatch
from . import tensor as T
from .tensor import Tensor

BCE_CLAMP = 1e-7


def _check_shapes(pred, target):
    if pred.shape != target.shape:
        raise ShapeMismatch(target.shape, pred.shape, "loss")


def mse(pred, target):
    pred = pred if isinstance(pred, Tensor) else Tensor(pred)
    target = target if isinstance(target, Tensor) else Tensor(target)
    _check_shapes(pred, target)
    d = pred - target
    return T.mean(d * d)


def l1(pred, target):
    pred = pred if isinstance(pred, Tensor) else Tensor(pred)
    target = target if isinstance(target, Tensor) else Tensor(target)
    _check_shapes(pred, target)
    return T.mean(T.abs_(pred - target))


def bce(pred, target):
    """Binary cross entropy; probabilities clamped away from {0, 1}."""
    pred = pred if isinstance(pred, Tensor) else Tensor(pred)
    target = target if isinstance(target, Tensor) else Tensor(target)
    _check_shapes(pred, target)
    p = T.clamp(pred, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return -T.mean(target * T.log(p) + (1.0 - target) * T.log(1.0 - p))


LOSSES = {"mse": mse, "bce": bce, "l1": l1}


def loss(kind, pred, target):
    return LOSSES[kind](pred, target)
