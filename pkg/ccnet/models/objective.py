# -*- coding: utf8 -*-
"""
The joint training loss: rejection-masked multi-stage classification plus
smooth-L1 box regression on positive RoIs.
"""
__all__ = (
    'LossConfig',
    'BoxTarget',
    'LossReport',
    'default_lambdas',
    'train_mask',
    'cls_loss',
    'loc_loss',
    'total_loss'
)
import numpy as np

from ccnet import config
from ccnet.autograd import Tensor
from ccnet.autograd import ops
from ccnet.errors import ConfigurationError


def default_lambdas(T):
    """
    lambda_T = 1 and lambda_t = 0.02 / T for every earlier stage.
    """
    lambdas = np.full(T, config.EARLY_STAGE_WEIGHT / T)
    lambdas[-1] = config.FINAL_STAGE_WEIGHT
    return lambdas


class LossConfig(object):
    """
    Stage weights, training thresholds r_1..r_(T-1) and the class count.
    """
    def __init__(self, T, K, lambdas=None, train_thresholds=None,
                 log_floor=config.LOG_FLOOR):
        self.T = int(T)
        self.K = int(K)
        self.lambdas = default_lambdas(self.T) if lambdas is None \
            else np.asarray(lambdas, dtype=np.float64)
        if train_thresholds is None:
            train_thresholds = [config.DEFAULT_TRAIN_THRESHOLD] * (self.T - 1)
        self.train_thresholds = np.asarray(train_thresholds, dtype=np.float64)
        self.log_floor = log_floor

        if self.lambdas.shape != (self.T,):
            raise ConfigurationError(
                'need {0} stage weights, got {1}'.format(
                    self.T, self.lambdas.size
                )
            )
        if self.train_thresholds.shape != (self.T - 1,):
            raise ConfigurationError(
                'need {0} training thresholds, got {1}'.format(
                    self.T - 1, self.train_thresholds.size
                )
            )


class BoxTarget(object):
    """
    Label k* (0 = background) and, for foreground only, the regression
    offsets l* = (tx, ty, tw, th).
    """
    __slots__ = ('label', 'offsets')

    def __init__(self, label, offsets=None):
        label = int(label)
        if label == 0 and offsets is not None:
            raise ConfigurationError('background targets carry no offsets')
        if label > 0 and offsets is None:
            raise ConfigurationError('foreground targets need offsets')
        self.label = label
        self.offsets = None if offsets is None \
            else np.asarray(offsets, dtype=np.float64)

    def __repr__(self):
        return '<BoxTarget k*={0}>'.format(self.label)


class LossReport(object):
    """
    One step's loss decomposition.
    """
    def __init__(self, cls_per_stage, mask_counts, loc, total, step=None):
        self.step = step
        self.cls_per_stage = [float(v) for v in cls_per_stage]
        self.mask_counts = [int(v) for v in mask_counts]
        self.loc = float(loc)
        self.total = float(total)

    def to_dict(self):
        return {
            'step': self.step,
            'cls_per_stage': self.cls_per_stage,
            'mask_counts': self.mask_counts,
            'loc': self.loc,
            'total': self.total
        }


def _values(p):
    return p.data if isinstance(p, Tensor) else np.asarray(p, np.float64)


def train_mask(p, labels, r):
    """
    u_1 = 1, and u_t = 1 iff p_(i, k*) < r_i for every i < t.

    `p` holds T probability arrays of shape [K + 1] (one RoI, scalar
    label) or [N, K + 1] (a batch, label vector). Returns u as [T] or
    [N, T].
    """
    probs = [_values(x) for x in p]
    labels = np.asarray(labels, dtype=np.int64)
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (len(probs) - 1,):
        raise ConfigurationError(
            '{0} stages need {1} training thresholds, got {2}'.format(
                len(probs), len(probs) - 1, r.size
            )
        )
    single = labels.ndim == 0
    if single:
        probs = [x[None] for x in probs]
        labels = labels[None]

    rows = np.arange(labels.shape[0])
    keep = np.ones((labels.shape[0], len(probs)))
    for t in range(1, len(probs)):
        below = probs[t - 1][rows, labels] < r[t - 1]
        keep[:, t] = keep[:, t - 1] * below
    return keep[0] if single else keep


def cls_loss(p, labels, cfg, u=None, reduce=True):
    """
    -sum_t lambda_t u_t log p_(t, k*), averaged over the batch.

    Masked stages contribute nothing, gradient included. Probabilities are
    clamped at `cfg.log_floor` inside the log. With ``reduce=False`` the
    per-stage loss terms come back as a list instead.
    """
    labels = np.asarray(labels, dtype=np.int64)
    single = labels.ndim == 0
    if u is None:
        u = train_mask(p, labels, cfg.train_thresholds)
    u = np.asarray(u, dtype=np.float64)
    if single:
        u = u[None]
    n = float(u.shape[0])

    terms = []
    for t, p_t in enumerate(p):
        p_t = ops.as_tensor(p_t)
        picked = ops.gather(p_t, labels)
        logp = ops.log(picked, floor=cfg.log_floor)
        weight = -cfg.lambdas[t] * u[:, t] / n
        if single:
            weight = weight[0]
        terms.append(ops.sum(ops.scale(logp, weight)))
    if not reduce:
        return terms

    total = terms[0]
    for term in terms[1:]:
        total = ops.add(total, term)
    return total


def loc_loss(l, l_star, labels):
    """
    Smooth-L1 regression loss summed over the 4 offsets, zero for
    background. `l` holds the offsets predicted for each RoI's true class.
    Averaged over the batch.
    """
    labels = np.asarray(labels, dtype=np.int64)
    l = ops.as_tensor(l)
    target = np.asarray(l_star, dtype=np.float64)
    if labels.ndim == 0:
        labels = labels[None]
        l = ops.reshape(l, (1, 4))
        target = target.reshape(1, 4)
    positive = (labels > 0).astype(np.float64)
    n = float(labels.shape[0])

    d = ops.sub(l, np.where(positive[:, None] > 0, target, 0.0))
    per_coord = ops.smooth_l1(d)
    return ops.sum(ops.scale(per_coord, positive[:, None] / n))


def _class_offsets(regression, labels):
    """
    Pick the 4 offsets of each RoI's labelled class out of [N, 4K]
    regression outputs (class k uses columns 4(k-1)..4k-1). Background
    rows pick class 1; their loss is masked anyway.
    """
    n = regression.shape[0]
    cols = np.maximum(labels - 1, 0)
    picked = []
    for c in range(4):
        picked.append(ops.reshape(
            ops.gather(regression, cols * 4 + c), (n, 1)
        ))
    return ops.concat(picked, axis=1)


def total_loss(p, labels, regression, targets, cfg, step=None):
    """
    L = L_cls + L_loc for a batch of RoIs.

    :param p: T probability tensors, [N, K + 1] each.
    :param labels: [N] labels k*.
    :param regression: [N, 4K] predicted offsets for every class.
    :param targets: [N, 4] regression targets (ignored for background).
    :returns: ``(loss, LossReport)``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    u = train_mask(p, labels, cfg.train_thresholds)
    terms = cls_loss(p, labels, cfg, u=u, reduce=False)
    loc = loc_loss(_class_offsets(ops.as_tensor(regression), labels),
                   targets, labels)

    total = loc
    for term in terms:
        total = ops.add(total, term)
    report = LossReport(
        [term.item() for term in terms],
        u.sum(axis=0),
        loc.item(),
        total.item(),
        step=step
    )
    return total, report
