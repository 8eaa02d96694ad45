# -*- coding: utf8 -*-
"""
The dense tensor every other part of ccnet is written against.

A `Tensor` wraps a float64 numpy array. Operations in `ccnet.autograd.ops`
record a backward closure on their output whenever an input requires
gradients, so a forward pass leaves behind a tape that `backward()` walks
in reverse. The tape is rebuilt on every forward pass.
"""
__all__ = ('Tensor', 'Parameter', 'no_grad', 'grad_enabled', 'backward')
import logging
from contextlib import contextmanager

import numpy as np

from ccnet.errors import ContractError, NumericError

logger = logging.getLogger(__name__)

#: Flipped off by `no_grad()`; ops skip recording while it is False.
_state = {'grad_enabled': True}


def grad_enabled():
    return _state['grad_enabled']


@contextmanager
def no_grad():
    """
    Evaluate without recording a backward graph (read-only inference).
    """
    previous = _state['grad_enabled']
    _state['grad_enabled'] = False
    try:
        yield
    finally:
        _state['grad_enabled'] = previous


class Tensor(object):
    """
    A dense row-major float64 array with an optional gradient slot.
    """
    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = None
        self._parents = ()
        self._backward = None

    @classmethod
    def from_op(cls, op, data, parents, backward):
        """
        Wrap the result of primitive `op`. `backward` maps the output
        gradient to one gradient (or ``None``) per entry of `parents`.
        """
        data = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(data)):
            raise NumericError(
                '{0} produced non-finite values'.format(op)
            )

        t = cls(data)
        t.op = op
        if _state['grad_enabled'] and any(p.requires_grad for p in parents):
            t.requires_grad = True
            t._parents = tuple(parents)
            t._backward = backward
        return t

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._backward is None

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def backward(self):
        """
        Fill ``.grad`` of every leaf reachable from this scalar with the
        derivative of this scalar with respect to that leaf. Gradients
        accumulate into existing ``.grad`` buffers.
        """
        if self.data.ndim != 0:
            raise ContractError(
                'backward() needs a scalar, got shape {0}'.format(self.shape)
            )
        if not self.requires_grad:
            logger.debug('backward() on a tensor with no recorded graph')
            return

        pending = {id(self): np.ones((), dtype=np.float64)}
        for node in reversed(_topological_order(self)):
            g = pending.pop(id(node), None)
            if g is None:
                continue

            if node.is_leaf:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue

            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if pg.shape != parent.shape:
                    raise ContractError(
                        '{0} returned a gradient of shape {1} for an input '
                        'of shape {2}'.format(node.op, pg.shape, parent.shape)
                    )
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg

    # Operator sugar; the real work is in ccnet.autograd.ops.
    def __add__(self, other):
        from ccnet.autograd import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from ccnet.autograd import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from ccnet.autograd import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from ccnet.autograd import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from ccnet.autograd import ops
        return ops.scale(self, -1.0)

    def __repr__(self):
        return '<Tensor shape={0} op={1} requires_grad={2}>'.format(
            self.shape, self.op, self.requires_grad
        )


class Parameter(Tensor):
    """
    A trainable leaf tensor. `name` is unique within a model and is the key
    used in checkpoints; `decay` says whether weight decay applies.
    """
    def __init__(self, data, name, decay=True):
        super(Parameter, self).__init__(data, requires_grad=True)
        self.name = name
        self.decay = decay

    @property
    def tensor(self):
        return self

    def __repr__(self):
        return '<Parameter {0} shape={1}>'.format(self.name, self.shape)


def backward(loss):
    """
    Functional form of `Tensor.backward`.
    """
    if not isinstance(loss, Tensor):
        raise ContractError('backward() needs a Tensor')
    loss.backward()


def _topological_order(root):
    """
    Post-order walk of the recorded graph below `root`, iterative so deep
    tapes don't hit the recursion limit.
    """
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order
