# -*- coding: utf8 -*-
"""
Central finite-difference checks of analytic gradients.
"""
__all__ = ('GradCheckReport', 'finite_diff_check')
import numpy as np

from ccnet.autograd.tensor import Tensor, no_grad


class GradCheckReport(object):
    """
    Per-tensor relative errors between analytic and numeric gradients.

    The relative error of one tensor is ``max|a - n| / max(max|a|, max|n|)``
    (0 when both gradients vanish).
    """
    def __init__(self, errors, analytic, numeric, tolerance=None):
        self.errors = errors
        self.analytic = analytic
        self.numeric = numeric
        self.tolerance = tolerance

    @property
    def max_rel_error(self):
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def passed(self):
        if self.tolerance is None:
            return True
        return self.max_rel_error < self.tolerance

    def __repr__(self):
        return '<GradCheckReport max_rel_error={0:.3e}>'.format(
            self.max_rel_error
        )


def _relative_error(a, n):
    scale = max(np.max(np.abs(a)), np.max(np.abs(n)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(a - n)) / scale)


def finite_diff_check(fn, tensors, step=1e-5, tolerance=None):
    """
    Compare the gradients `backward()` produces for `tensors` against
    central differences of `fn`.

    :param fn: Zero-argument callable returning a scalar Tensor. It must be
               deterministic.
    :param tensors: The leaf tensors (usually Parameters) to check.
    :param step: Finite-difference step.
    :param tolerance: If given, `report.passed` compares against it.
    """
    for t in tensors:
        t.zero_grad()
    loss = fn()
    loss.backward()
    analytic = {}
    for i, t in enumerate(tensors):
        analytic[getattr(t, 'name', str(i))] = t.grad.copy()

    numeric = {}
    with no_grad():
        for i, t in enumerate(tensors):
            estimate = np.zeros(t.shape)
            for idx in np.ndindex(*t.shape):
                original = t.data[idx]
                t.data[idx] = original + step
                upper = _value(fn())
                t.data[idx] = original - step
                lower = _value(fn())
                t.data[idx] = original
                estimate[idx] = (upper - lower) / (2.0 * step)
            numeric[getattr(t, 'name', str(i))] = estimate

    errors = dict(
        (name, _relative_error(analytic[name], numeric[name]))
        for name in analytic
    )
    return GradCheckReport(errors, analytic, numeric, tolerance=tolerance)


def _value(t):
    return t.item() if isinstance(t, Tensor) else float(t)
