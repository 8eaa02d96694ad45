# -*- coding: utf8 -*-
"""
Feature chaining, classifier chaining and the cascade inference loop.

Class index 0 is background everywhere; indices 1..K are the foreground
classes.
"""
__all__ = (
    'Classifier',
    'ChainParams',
    'StageRecord',
    'ChainTrace',
    'chain_features',
    'stage_scores',
    'chain_scores',
    'normalize_scores',
    'gate',
    'chain_forward',
    'cascade_infer',
    'CHAINED',
    'CONVENTIONAL'
)
import numpy as np

from ccnet import config
from ccnet.autograd import Parameter, Tensor, no_grad
from ccnet.autograd import ops
from ccnet.errors import ConfigurationError

#: Score accumulation rules understood by `cascade_infer`.
CHAINED = 'chained'
CONVENTIONAL = 'conventional'

def _softplus_ratio(x):
    # Raw chained sums go negative; softplus keeps every score positive.
    return ops.ratio_normalize(ops.softplus(x))


NORMALIZERS = {
    'softmax': ops.softmax,
    'ratio': _softplus_ratio
}


class Classifier(object):
    """
    The affine map c_t: feature -> K + 1 raw class scores.
    """
    def __init__(self, weight, bias):
        self.weight = weight
        self.bias = bias

    @classmethod
    def new(cls, name, in_dim, num_scores, rng, std=0.01):
        return cls(
            Parameter(
                rng.normal(0.0, std, size=(num_scores, in_dim)),
                '{0}.weight'.format(name)
            ),
            Parameter(np.zeros(num_scores), '{0}.bias'.format(name),
                      decay=False)
        )

    def parameters(self):
        yield self.weight
        yield self.bias

    def __call__(self, f):
        return ops.linear(f, self.weight, self.bias)


class ChainParams(object):
    """
    Everything the chaining layers learn: per-channel feature scales
    a_2..a_T, score scales b_1..b_T, the T classifiers and the inference
    thresholds r_1..r_T (on normalised probabilities, in [0, 1]).
    """
    def __init__(self, a, b, classifiers, thresholds=None,
                 normalize='softmax'):
        if len(b) != len(classifiers):
            raise ConfigurationError(
                'need one score scale per classifier ({0} vs {1})'.format(
                    len(b), len(classifiers)
                )
            )
        if normalize not in NORMALIZERS:
            raise ConfigurationError(
                'unknown normalisation {0!r}; use one of: {1}'.format(
                    normalize, ', '.join(sorted(NORMALIZERS))
                )
            )
        self.a = list(a)
        self.b = list(b)
        self.classifiers = list(classifiers)
        self.normalize = normalize
        self.thresholds = np.zeros(len(self.classifiers))
        if thresholds is not None:
            self.set_thresholds(thresholds)

    @classmethod
    def new(cls, feature_dims, num_classes, rng, learn_scales=True,
            normalize='softmax'):
        """
        Fresh chaining parameters for ``len(feature_dims)`` stages. Every
        scale starts at exactly 1.
        """
        T = len(feature_dims)
        scores = num_classes + 1

        def _scale(name, size):
            if learn_scales:
                return Parameter(np.ones(size), name, decay=False)
            return Tensor(np.ones(size))

        a = [
            _scale('chain.a{0}'.format(t), feature_dims[t - 1])
            for t in range(2, T + 1)
        ]
        b = [_scale('chain.b{0}'.format(t), scores) for t in range(1, T + 1)]
        classifiers = [
            Classifier.new('stage{0}.cls'.format(t), feature_dims[t - 1],
                           scores, rng)
            for t in range(1, T + 1)
        ]
        return cls(a, b, classifiers, normalize=normalize)

    @property
    def stages(self):
        return len(self.classifiers)

    @property
    def num_scores(self):
        return self.classifiers[0].weight.shape[0]

    def set_thresholds(self, thresholds):
        thresholds = np.asarray(thresholds, dtype=np.float64)
        if thresholds.shape != (self.stages,):
            raise ConfigurationError(
                'expected {0} thresholds, got {1}'.format(
                    self.stages, thresholds.size
                )
            )
        if np.any(thresholds < 0) or np.any(thresholds > 1):
            raise ConfigurationError('thresholds must lie in [0, 1]')
        self.thresholds = thresholds

    def parameters(self):
        for t in self.a + self.b:
            if isinstance(t, Parameter):
                yield t
        for c in self.classifiers:
            for p in c.parameters():
                yield p


def _scales(params, attr):
    return getattr(params, attr) if isinstance(params, ChainParams) \
        else list(params)


def chain_features(o, params):
    """
    f_1 = o_1 and f_t = a_t ⊙ o_t + f_(t-1).

    `o` holds T stage features ([C1] or [N, C1]); `params` is a ChainParams
    or the list a_2..a_T itself.
    """
    a = _scales(params, 'a')
    o = [ops.as_tensor(x) for x in o]
    if len(a) != len(o) - 1:
        raise ConfigurationError(
            'feature chaining over {0} stages needs {1} scale vectors, '
            'got {2}'.format(len(o), len(o) - 1, len(a))
        )
    width = o[0].shape[-1]
    for t, x in enumerate(o, 1):
        if x.shape[-1] != width:
            raise ConfigurationError(
                'stage {0} feature has length {1}, expected {2}'.format(
                    t, x.shape[-1], width
                )
            )

    f = [o[0]]
    for a_t, o_t in zip(a, o[1:]):
        f.append(ops.add(ops.elementwise_scale(o_t, a_t), f[-1]))
    return f


def stage_scores(f_t, classifier):
    """
    Raw, unnormalised K + 1 scores c_t(f_t).
    """
    if isinstance(classifier, (tuple, list)):
        classifier = Classifier(*classifier)
    return classifier(f_t)


def chain_scores(raw, b):
    """
    Partial sum through stage t: sum over i <= t of b_i ⊙ raw_i.
    """
    b = _scales(b, 'b')
    if len(b) < len(raw):
        raise ConfigurationError(
            '{0} score vectors but only {1} scale vectors'.format(
                len(raw), len(b)
            )
        )
    total = None
    for b_i, raw_i in zip(b, raw):
        term = ops.elementwise_scale(raw_i, b_i)
        total = term if total is None else ops.add(total, term)
    return total


def normalize_scores(partial, kind='softmax'):
    """
    Scores -> probabilities. ``softmax`` is the default; ``ratio`` divides
    the softplus of every score by their sum and raises `NumericError`
    only when all of them underflow to 0.
    """
    try:
        return NORMALIZERS[kind](partial)
    except KeyError:
        raise ConfigurationError(
            'unknown normalisation {0!r}'.format(kind)
        )


def gate(p, r, background_index=config.BACKGROUND_INDEX):
    """
    True (pass) iff the largest foreground probability exceeds `r`.
    """
    p = p.data if isinstance(p, Tensor) else np.asarray(p, dtype=np.float64)
    foreground = np.delete(p, background_index, axis=-1)
    return bool(foreground.max(axis=-1) > r)


def chain_forward(o, params, classifier_chaining=True,
                  feature_chaining=True):
    """
    Training-time forward over a batch: every stage for every RoI.

    Returns ``(f, raw, partial, probs)``, each a list of T tensors.
    """
    o = [ops.as_tensor(x) for x in o]
    if len(o) != params.stages:
        raise ConfigurationError(
            '{0} stage features for {1} classifiers'.format(
                len(o), params.stages
            )
        )
    f = chain_features(o, params) if feature_chaining else o
    raw = [stage_scores(f_t, c) for f_t, c in zip(f, params.classifiers)]

    partial = []
    for t in range(len(raw)):
        if classifier_chaining:
            partial.append(chain_scores(raw[:t + 1], params.b[:t + 1]))
        else:
            partial.append(ops.elementwise_scale(raw[t], params.b[t]))
    probs = [normalize_scores(s, params.normalize) for s in partial]
    return f, raw, partial, probs


class StageRecord(object):
    """
    What one cascade stage computed for one RoI.
    """
    def __init__(self, stage, o, f, raw, partial, probs, passed):
        self.stage = stage
        self.o = o
        self.f = f
        self.raw = raw
        self.partial = partial
        self.probs = probs
        self.passed = passed

    @property
    def max_foreground(self):
        return float(np.delete(self.probs, config.BACKGROUND_INDEX).max())


class ChainTrace(object):
    """
    Per-RoI record of a cascade run. Stages after a rejection are absent.
    """
    def __init__(self, stages):
        self.stages = stages

    @property
    def final_stage_reached(self):
        return len(self.stages)

    @property
    def rejected(self):
        return not self.stages[-1].passed

    @property
    def verdict(self):
        return 'background' if self.rejected else 'object'

    @property
    def probs(self):
        """
        The detection distribution p_T, or None when the RoI was rejected.
        """
        return None if self.rejected else self.stages[-1].probs

    def to_record(self, **extra):
        """
        A JSON-ready summary: stage reached, per-stage max foreground
        probability and the verdict.
        """
        record = {
            'stage_reached': self.final_stage_reached,
            'max_fg': [s.max_foreground for s in self.stages],
            'verdict': self.verdict
        }
        record.update(extra)
        return record


def cascade_infer(o, params, mode=CHAINED, feature_chaining=True,
                  thresholds=None):
    """
    Run the cascade for one RoI given its T stage features o_t ([C1] each).

    In chained mode the stage-t scores are the partial sums over stages
    1..t; in conventional mode only b_t ⊙ c_t(f_t). The loop stops at the
    first stage whose gate rejects.
    """
    if mode not in (CHAINED, CONVENTIONAL):
        raise ConfigurationError(
            'unknown cascade mode {0!r}; use {1!r} or {2!r}'.format(
                mode, CHAINED, CONVENTIONAL
            )
        )
    r = params.thresholds if thresholds is None \
        else np.asarray(thresholds, dtype=np.float64)
    if len(o) != params.stages or len(r) != params.stages:
        raise ConfigurationError(
            'cascade has {0} classifiers but got {1} features and {2} '
            'thresholds'.format(params.stages, len(o), len(r))
        )

    records = []
    with no_grad():
        f_prev, partial = None, None
        for t in range(params.stages):
            o_t = ops.as_tensor(o[t])
            if f_prev is None or not feature_chaining:
                f_t = o_t
            else:
                f_t = ops.add(ops.elementwise_scale(o_t, params.a[t - 1]),
                              f_prev)
            raw = stage_scores(f_t, params.classifiers[t])
            term = ops.elementwise_scale(raw, params.b[t])
            if mode == CHAINED and partial is not None:
                partial = ops.add(partial, term)
            else:
                partial = term
            probs = normalize_scores(partial, params.normalize)
            passed = gate(probs, r[t])
            records.append(StageRecord(
                t + 1, o_t.data, f_t.data, raw.data, partial.data,
                probs.data, passed
            ))
            if not passed:
                break
            f_prev = f_t
    return ChainTrace(records)
