# -*- coding: utf8 -*-
__all__ = ('Backbone', 'he_normal')
import numpy as np

from ccnet import config
from ccnet.autograd import Parameter
from ccnet.autograd import ops
from ccnet.errors import ConfigurationError


def he_normal(rng, shape):
    """
    He-normal initialisation for a conv [O, C, kh, kw] or linear [O, I]
    weight.
    """
    fan_in = int(np.prod(shape[1:]))
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Backbone(object):
    """
    Four 3x3 conv + relu layers with a 2x2 max pool after each of the first
    three, giving a feature map at 1/8 of the image resolution.
    """
    stride = config.BACKBONE_STRIDE

    def __init__(self, channels, in_channels=3, rng=None):
        if len(channels) != 4:
            raise ConfigurationError(
                'backbone needs 4 conv widths, got {0}'.format(len(channels))
            )
        rng = rng if rng is not None else np.random.default_rng(0)
        self.channels = tuple(channels)
        self.layers = []
        previous = in_channels
        for i, width in enumerate(channels):
            w = Parameter(
                he_normal(rng, (width, previous, 3, 3)),
                'backbone.conv{0}.weight'.format(i + 1)
            )
            b = Parameter(
                np.zeros(width),
                'backbone.conv{0}.bias'.format(i + 1),
                decay=False
            )
            self.layers.append((w, b))
            previous = width

    @property
    def out_channels(self):
        return self.channels[-1]

    def parameters(self):
        for w, b in self.layers:
            yield w
            yield b

    def __call__(self, image):
        """
        [3, H, W] image -> [C, H/8, W/8] feature map.
        """
        x = image
        for i, (w, b) in enumerate(self.layers):
            x = ops.relu(ops.conv2d(x, w, b))
            if i < len(self.layers) - 1:
                x = ops.max_pool(x, 2)
        return x
