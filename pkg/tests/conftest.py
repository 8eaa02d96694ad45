# -*- coding: utf8 -*-
import os

import numpy as np
import pytest

from ccnet import runconfig
from ccnet.models.box import Box
from ccnet.models.chain import ChainTrace, StageRecord

#: Two stages on 32 pixel images: small enough that a full train, calibrate
#: and eval cycle runs in seconds.
TINY_CONFIG = """\
mode: chained_cascade
seeds: [0]
output: out

stages:
  - {pooled_size: 3, context: 0.0}
  - {pooled_size: 2, context: 0.5}

model:
  backbone_channels: [4, 4, 4, 4]
  head_channels: 6

data:
  classes: 2
  train_images: 4
  test_images: 3
  calib_images: 3
  image_size: 32
  proposals_per_image: 8
  jitter: 0.1
  neg_fraction: 0.5

optimizer:
  lr: 0.01
  steps: 3
  decay_at: []

train:
  checkpoint_every: 0
"""


@pytest.fixture
def tiny_text():
    return TINY_CONFIG


@pytest.fixture
def tiny_cfg(tmp_path):
    cfg = runconfig.loads(TINY_CONFIG)
    return cfg.replace(output=str(tmp_path / 'out'))


@pytest.fixture
def tiny_config_path(tmp_path):
    path = tmp_path / 'tiny.yaml'
    path.write_text(
        TINY_CONFIG.replace('output: out', 'output: {0}'.format(
            os.path.join(str(tmp_path), 'out')
        ))
    )
    return str(path)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_trace(max_fg, passed=None):
    """
    A two-class (background + one object) trace whose stage t has max
    foreground probability ``max_fg[t]``.
    """
    passed = passed or [True] * len(max_fg)
    stages = []
    for t, (m, ok) in enumerate(zip(max_fg, passed), 1):
        probs = np.array([1.0 - m, m])
        stages.append(StageRecord(t, None, None, None, None, probs, ok))
    return ChainTrace(stages)


def corners(x1, y1, x2, y2):
    return Box.from_corners(x1, y1, x2, y2)
