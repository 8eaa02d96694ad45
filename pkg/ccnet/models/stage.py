# -*- coding: utf8 -*-
"""
Per-stage RoI features: context padding, RoI max pooling at a
stage-specific resolution, and the stage's own conv head followed by global
average pooling.
"""
__all__ = (
    'StageSpec',
    'StageHead',
    'pad_box',
    'roi_bins',
    'roi_windows',
    'roi_pool',
    'roi_pool_many',
    'stage_head'
)
import math

import numpy as np

from ccnet.autograd import Parameter
from ccnet.autograd import ops
from ccnet.errors import ConfigurationError
from ccnet.models.box import Box


def pad_box(box, c, image_w, image_h):
    """
    Grow `box` to (1 + c) times its width and height about the same center,
    then clamp it to the image.
    """
    if c < 0:
        raise ConfigurationError('context padding must be nonnegative')
    padded = Box(box.cx, box.cy, (1.0 + c) * box.w, (1.0 + c) * box.h)
    x1, y1, x2, y2 = padded.corners
    if x1 >= 0 and y1 >= 0 and x2 <= image_w and y2 <= image_h:
        return padded
    return padded.clamp(image_w, image_h)


def roi_bins(start, end, out_size, limit):
    """
    Split the feature-map span ``[start, end)`` (fractional cell units) into
    `out_size` half-open integer bins. The span is widened to whole cells
    (floor of the start, ceil of the end) and clipped to ``[0, limit)``;
    bin i covers ``floor(i * L / s)`` to ``ceil((i + 1) * L / s)``. A span
    with no cells collapses onto the single nearest cell.
    """
    lo = max(int(math.floor(start)), 0)
    hi = min(int(math.ceil(end)), limit)
    if hi <= lo:
        nearest = int(math.floor((start + end) / 2.0))
        lo = min(max(nearest, 0), limit - 1)
        hi = lo + 1

    length = hi - lo
    return [
        (lo + (i * length) // out_size,
         lo + -(-((i + 1) * length) // out_size))
        for i in range(out_size)
    ]


def roi_windows(box, out_size, stride, map_h, map_w):
    """
    Row and column bins of `box` (image pixels) on a map of the given size.
    """
    x1, y1, x2, y2 = box.corners
    rows = roi_bins(y1 / stride, y2 / stride, out_size, map_h)
    cols = roi_bins(x1 / stride, x2 / stride, out_size, map_w)
    return rows, cols


def roi_pool(featmap, box, out_size, stride):
    """
    Max-pool `box` out of a [C, Hf, Wf] map into [C, out_size, out_size].
    """
    featmap = ops.as_tensor(featmap)
    C = featmap.shape[0]
    pooled = roi_pool_many(featmap, [box], out_size, stride)
    return ops.reshape(pooled, (C, out_size, out_size))


def roi_pool_many(featmap, boxes, out_size, stride):
    """
    Batched `roi_pool`: [N, C, out_size, out_size] for N boxes.
    """
    featmap = ops.as_tensor(featmap)
    if featmap.ndim != 3:
        raise ConfigurationError(
            'roi_pool needs a [C, H, W] map, got {0}'.format(featmap.shape)
        )
    _, map_h, map_w = featmap.shape
    windows = [
        roi_windows(box, out_size, stride, map_h, map_w) for box in boxes
    ]
    return ops.roi_max_pool(featmap, windows)


class StageHead(object):
    """
    One stage's conv block: 3x3 conv + relu, then global average pooling
    down to a C1 vector.
    """
    def __init__(self, index, weight, bias):
        self.index = index
        self.weight = Parameter(
            np.array(weight), 'stage{0}.head.weight'.format(index)
        )
        self.bias = Parameter(
            np.array(bias), 'stage{0}.head.bias'.format(index), decay=False
        )

    @property
    def in_channels(self):
        return self.weight.shape[1]

    @property
    def out_channels(self):
        return self.weight.shape[0]

    def parameters(self):
        yield self.weight
        yield self.bias

    def __call__(self, pooled):
        if pooled.shape[-3] != self.in_channels:
            raise ConfigurationError(
                'stage {0} head expects {1} channels, got {2}'.format(
                    self.index, self.in_channels, pooled.shape[-3]
                )
            )
        x = ops.relu(ops.conv2d(pooled, self.weight, self.bias))
        return ops.global_avg_pool(x)


class StageSpec(object):
    """
    Geometry and head of cascade stage `index` (1-based).
    """
    def __init__(self, index, pooled_size, context, head=None):
        if pooled_size < 1:
            raise ConfigurationError(
                'stage {0}: pooled_size must be positive'.format(index)
            )
        if context < 0:
            raise ConfigurationError(
                'stage {0}: context must be nonnegative'.format(index)
            )
        self.index = index
        self.pooled_size = int(pooled_size)
        self.context = float(context)
        self.head = head

    def features(self, featmap, boxes, image_w, image_h, stride):
        """
        o_t for every box: pad, pool and run the head. Returns [N, C1].
        """
        padded = [pad_box(b, self.context, image_w, image_h) for b in boxes]
        pooled = roi_pool_many(featmap, padded, self.pooled_size, stride)
        return stage_head(pooled, self)

    def __repr__(self):
        return '<StageSpec t={0} pooled={1} c={2}>'.format(
            self.index, self.pooled_size, self.context
        )


def stage_head(pooled, spec):
    """
    Apply `spec`'s head to roi-pooled features of spatial size
    ``spec.pooled_size``.
    """
    if tuple(pooled.shape[-2:]) != (spec.pooled_size, spec.pooled_size):
        raise ConfigurationError(
            'stage {0} expects {1}x{1} pooled features, got {2}'.format(
                spec.index, spec.pooled_size, tuple(pooled.shape[-2:])
            )
        )
    return spec.head(pooled)
