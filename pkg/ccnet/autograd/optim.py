# -*- coding: utf8 -*-
__all__ = ('sgd_step', 'lr_at', 'zero_grad')
import numpy as np

from ccnet.errors import ContractError


def zero_grad(params):
    """
    Give every parameter an all-zero gradient buffer, so parameters the
    next backward pass doesn't reach end up with zero gradients.
    """
    for p in params:
        p.zero_grad()


def sgd_step(params, lr, weight_decay=0.0):
    """
    Plain SGD with weight decay:

        p <- p - lr * (grad + weight_decay * p)

    Decay only applies to parameters with ``decay`` set. Gradients are
    cleared afterwards.
    """
    if lr < 0:
        raise ContractError('learning rate must be nonnegative')
    if weight_decay < 0:
        raise ContractError('weight decay must be nonnegative')

    for p in params:
        if p.grad is None:
            raise ContractError(
                'parameter {0} has no gradient'.format(p.name)
            )

    for p in params:
        step = p.grad
        if p.decay and weight_decay:
            step = step + weight_decay * p.data
        p.data = p.data - lr * step
        p.grad = None


def lr_at(step, total_steps, base_lr, decay_at=(), decay_factor=0.1):
    """
    Step schedule: `base_lr`, multiplied by `decay_factor` once for every
    fraction in `decay_at` that `step / total_steps` has reached.
    """
    if total_steps <= 0:
        return base_lr
    progress = float(step) / total_steps
    passed = int(np.sum(np.asarray(decay_at, dtype=np.float64) <= progress))
    return base_lr * decay_factor ** passed
