# -*- coding: utf8 -*-
import numpy as np
import pytest
from numpy.testing import assert_array_equal

from ccnet import config
from ccnet.autograd import Tensor, finite_diff_check, sgd_step, zero_grad
from ccnet.autograd import ops
from ccnet.errors import ConfigurationError
from ccnet.models import CCNet, Box, pad_box, roi_bins, roi_pool, stage_head


class TestPadBox(object):
    def test_no_context(self):
        box = Box(50, 30, 100, 60)
        assert pad_box(box, 0.0, 1000, 1000) == box

    def test_grows_about_center(self):
        padded = pad_box(Box(50, 30, 100, 60), 0.5, 1000, 1000)
        assert (padded.w, padded.h) == (150, 90)
        assert (padded.cx, padded.cy) == (50, 30)

    def test_clamped_to_image(self):
        padded = pad_box(Box(10, 50, 20, 20), 1.7, 100, 100)
        assert padded.corners[0] == 0.0
        assert Box.from_corners(0, 0, 100, 100).contains(padded)

    def test_monotone(self, rng):
        for _ in range(100):
            box = Box(*rng.uniform(10, 100, size=4))
            c1, c2 = sorted(rng.uniform(0, 2, size=2))
            small = pad_box(box, c1, 1e6, 1e6)
            large = pad_box(box, c2, 1e6, 1e6)
            assert large.contains(small)

    def test_negative_context(self):
        with pytest.raises(ConfigurationError):
            pad_box(Box(5, 5, 2, 2), -0.1, 10, 10)


class TestRoiPool(object):
    def test_identity_partition(self, rng):
        fm = rng.normal(size=(2, 4, 4))
        out = roi_pool(Tensor(fm), Box.from_corners(0, 0, 4, 4), 4, 1)
        assert_array_equal(out.data, fm)

    def test_constant_map(self, rng):
        fm = np.full((3, 6, 6), 1.25)
        for _ in range(10):
            x1, y1 = rng.uniform(0, 20, size=2)
            box = Box.from_corners(x1, y1, x1 + 20, y1 + 15)
            out = roi_pool(Tensor(fm), box, 3, 8)
            assert_array_equal(out.data, np.full((3, 3, 3), 1.25))

    def test_quadrant_max(self, rng):
        fm = rng.permutation(16).astype(float).reshape(1, 4, 4)
        out = roi_pool(Tensor(fm), Box.from_corners(0, 0, 4, 4), 2, 1).data
        for i in range(2):
            for j in range(2):
                quadrant = fm[0, 2 * i:2 * i + 2, 2 * j:2 * j + 2]
                assert out[0, i, j] == quadrant.max()

    def test_permutation_within_bin(self, rng):
        fm = rng.normal(size=(1, 4, 4))
        box = Box.from_corners(0, 0, 4, 4)
        before = roi_pool(Tensor(fm), box, 2, 1).data

        shuffled = fm.copy()
        cells = shuffled[0, :2, 2:].ravel()
        shuffled[0, :2, 2:] = rng.permutation(cells).reshape(2, 2)
        assert_array_equal(roi_pool(Tensor(shuffled), box, 2, 1).data, before)

    def test_bins_partition(self):
        assert roi_bins(0.0, 4.0, 2, 4) == [(0, 2), (2, 4)]
        assert roi_bins(0.0, 5.0, 2, 8) == [(0, 3), (2, 5)]
        assert roi_bins(0.5, 2.5, 3, 8) == [(0, 1), (1, 2), (2, 3)]

    def test_degenerate_region(self):
        # Entirely right of a 4-cell map: every bin takes the nearest cell.
        assert roi_bins(5.0, 5.5, 2, 4) == [(3, 4), (3, 4)]
        fm = np.arange(16.0).reshape(1, 4, 4)
        out = roi_pool(Tensor(fm), Box.from_corners(40, 0, 44, 32), 2, 8)
        assert_array_equal(out.data[0, :, 0], out.data[0, :, 1])
        assert set(out.data[0, :, 0]) <= set(fm[0, :, 3])

    def test_gradient(self, rng):
        fm = Tensor(rng.normal(size=(2, 6, 6)), requires_grad=True)
        box = Box.from_corners(4, 2, 40, 30)
        coef = rng.normal(size=(2, 3, 3))
        report = finite_diff_check(
            lambda: ops.sum(ops.mul(roi_pool(fm, box, 3, 8), coef)), [fm],
            tolerance=1e-4
        )
        assert report.passed
        # Only winning cells get gradient.
        assert np.count_nonzero(report.analytic['0']) <= 2 * 9


def small_net(stages=((3, 0.0), (2, 0.5)), **kwargs):
    return CCNet.new(list(stages), 2, seed=0, backbone_channels=(4, 4, 4, 4),
                     head_channels=6, **kwargs)


class TestStageHead(object):
    def test_shared_init(self, rng):
        net = small_net(stages=((3, 0.0), (3, 0.5)))
        pooled = Tensor(rng.normal(size=(2, 4, 3, 3)))
        first = stage_head(pooled, net.specs[0])
        second = stage_head(pooled, net.specs[1])
        assert first.shape == (2, 6)
        assert_array_equal(first.data, second.data)

    def test_pooled_size_mismatch(self, rng):
        net = small_net()
        with pytest.raises(ConfigurationError):
            stage_head(Tensor(rng.normal(size=(1, 4, 3, 3))), net.specs[1])

    def test_channel_mismatch(self, rng):
        net = small_net()
        with pytest.raises(ConfigurationError):
            stage_head(Tensor(rng.normal(size=(1, 5, 3, 3))), net.specs[0])

    def test_heads_diverge(self, rng):
        net = small_net(feature_chaining=False, classifier_chaining=False)
        image = rng.uniform(size=(3, 32, 32))
        boxes = [Box.from_corners(4, 4, 20, 24)]
        before = [
            (s.head.weight.data.copy(), s.head.bias.data.copy())
            for s in net.specs
        ]

        params = list(net.parameters())
        zero_grad(params)
        out = net(image, boxes)
        loss = ops.scale(ops.sum(ops.log(ops.gather(out.probs[1],
                                                    np.array([1])))), -1.0)
        loss.backward()
        sgd_step(params, lr=0.5, weight_decay=0.0)

        assert_array_equal(net.specs[0].head.weight.data, before[0][0])
        assert_array_equal(net.specs[0].head.bias.data, before[0][1])
        assert not np.array_equal(net.specs[1].head.weight.data, before[1][0])

    def test_default_geometry_equal_widths(self, rng):
        stages = list(zip(config.DEFAULT_POOLED_SIZES,
                          config.DEFAULT_CONTEXTS))
        net = small_net(stages=stages)
        image = rng.uniform(size=(3, 64, 64))
        boxes = [Box.from_corners(8, 8, 40, 30), Box.from_corners(0, 30, 20, 64)]
        o = net.stage_features(image, boxes)
        assert len(o) == 4
        assert all(o_t.shape == (2, 6) for o_t in o)

    def test_concat_features(self, rng):
        net = small_net(concat=True, feature_chaining=False,
                        classifier_chaining=False)
        o = net.stage_features(rng.uniform(size=(3, 32, 32)),
                               [Box.from_corners(0, 0, 16, 16)])
        assert len(o) == 1
        assert o[0].shape == (1, 12)
        assert net.stages == 1
