# -*- coding: utf8 -*-
"""
The assembled detector: backbone, per-stage RoI heads, the chaining layers
and a single box regressor on the last feature.
"""
__all__ = ('CCNet', 'NetOutput')
from collections import namedtuple

import numpy as np

from ccnet import config
from ccnet.autograd import ops
from ccnet.errors import ConfigurationError
from ccnet.models.backbone import Backbone, he_normal
from ccnet.models.chain import (
    CHAINED,
    CONVENTIONAL,
    ChainParams,
    Classifier,
    cascade_infer,
    chain_forward
)
from ccnet.models.stage import StageHead, StageSpec

#: Everything a training forward pass produces, one list entry per stage.
NetOutput = namedtuple(
    'NetOutput', ['o', 'f', 'raw', 'partial', 'probs', 'regression']
)


class CCNet(object):
    def __init__(self, backbone, specs, chain, regressor, num_classes,
                 feature_chaining=True, classifier_chaining=True,
                 concat=False):
        self.backbone = backbone
        self.specs = list(specs)
        self.chain = chain
        self.regressor = regressor
        self.num_classes = num_classes
        self.feature_chaining = feature_chaining
        self.classifier_chaining = classifier_chaining
        self.concat = concat

        expected = 1 if concat else len(self.specs)
        if chain.stages != expected:
            raise ConfigurationError(
                '{0} stage heads need {1} classifiers, got {2}'.format(
                    len(self.specs), expected, chain.stages
                )
            )

        seen = set()
        for p in self.parameters():
            if p.name in seen:
                raise ConfigurationError(
                    'duplicate parameter name {0!r}'.format(p.name)
                )
            seen.add(p.name)

    @classmethod
    def new(cls, stages, num_classes, seed,
            backbone_channels=config.DEFAULT_BACKBONE_CHANNELS,
            head_channels=config.DEFAULT_HEAD_CHANNELS,
            feature_chaining=True, classifier_chaining=True, concat=False,
            learn_scales=True, normalize='softmax'):
        """
        Build a freshly initialised network.

        :param stages: ``(pooled_size, context)`` pairs, one per stage.
        :param seed: seeds every initialiser; equal seeds give identical
                     networks.
        """
        if num_classes < 1:
            raise ConfigurationError('need at least one foreground class')
        if not stages:
            raise ConfigurationError('need at least one stage')

        rng = np.random.default_rng(seed)
        backbone = Backbone(backbone_channels, rng=rng)

        # Every stage head starts from the same weights and then trains on
        # its own.
        head_w = he_normal(
            rng, (head_channels, backbone.out_channels, 3, 3)
        )
        head_b = np.zeros(head_channels)
        specs = []
        for t, (pooled_size, context) in enumerate(stages, 1):
            specs.append(StageSpec(
                t, pooled_size, context, StageHead(t, head_w, head_b)
            ))

        dims = [head_channels * len(specs)] if concat \
            else [head_channels] * len(specs)
        chain = ChainParams.new(
            dims, num_classes, rng,
            learn_scales=learn_scales,
            normalize=normalize
        )
        if not feature_chaining:
            # f_t = o_t; the a_t scales never enter the graph.
            chain.a = []

        regressor = Classifier.new('bbox', dims[-1], 4 * num_classes, rng,
                                   std=0.001)
        return cls(
            backbone, specs, chain, regressor, num_classes,
            feature_chaining=feature_chaining,
            classifier_chaining=classifier_chaining,
            concat=concat
        )

    @property
    def stages(self):
        """
        Number of cascade stages seen by the chaining layers.
        """
        return self.chain.stages

    @property
    def cascade_mode(self):
        return CHAINED if self.classifier_chaining else CONVENTIONAL

    def parameters(self):
        for p in self.backbone.parameters():
            yield p
        for spec in self.specs:
            for p in spec.head.parameters():
                yield p
        for p in self.chain.parameters():
            yield p
        for p in self.regressor.parameters():
            yield p

    def named_parameters(self):
        return dict((p.name, p) for p in self.parameters())

    def stage_features(self, image, boxes):
        """
        o_1..o_T for every box, each [N, C1]. In concatenation mode a single
        [N, T * C1] feature.
        """
        image = ops.as_tensor(image)
        if image.ndim != 3:
            raise ConfigurationError(
                'expected a [3, H, W] image, got {0}'.format(image.shape)
            )
        featmap = self.backbone(image)
        image_h, image_w = image.shape[-2:]
        o = [
            spec.features(featmap, boxes, image_w, image_h,
                          self.backbone.stride)
            for spec in self.specs
        ]
        if self.concat:
            return [ops.concat(o, axis=1)]
        return o

    def forward(self, image, boxes):
        o = self.stage_features(image, boxes)
        f, raw, partial, probs = chain_forward(
            o, self.chain,
            classifier_chaining=self.classifier_chaining,
            feature_chaining=self.feature_chaining
        )
        return NetOutput(o, f, raw, partial, probs, self.regressor(f[-1]))

    __call__ = forward

    def infer(self, o, thresholds=None):
        """
        Cascade one RoI given its per-stage features (rows of
        `stage_features`).
        """
        return cascade_infer(
            o, self.chain,
            mode=self.cascade_mode,
            feature_chaining=self.feature_chaining,
            thresholds=thresholds
        )

    def regress(self, f):
        """
        Box offsets for every class from a final feature: [K, 4].
        """
        out = self.regressor(ops.as_tensor(f))
        return out.data.reshape(self.num_classes, 4)
