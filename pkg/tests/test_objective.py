# -*- coding: utf8 -*-
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ccnet.autograd import (
    Parameter,
    Tensor,
    finite_diff_check,
    sgd_step,
    zero_grad
)
from ccnet.autograd import ops
from ccnet.errors import ConfigurationError, ContractError
from ccnet.models import (
    Box,
    ChainParams,
    Classifier,
    LossConfig,
    StageHead,
    StageSpec,
    bbox_decode,
    bbox_encode,
    chain_forward,
    cls_loss,
    default_lambdas,
    loc_loss,
    total_loss,
    train_mask
)
from ccnet.models.backbone import he_normal


def one_hot_probs(T, value, label=1, K=2):
    """
    T copies of a [K + 1] distribution with ``value`` on `label`.
    """
    p = np.full(K + 1, (1.0 - value) / K)
    p[label] = value
    return [p.copy() for _ in range(T)]


class TestLossConfig(object):
    def test_default_lambdas(self):
        assert_allclose(default_lambdas(4), [0.005, 0.005, 0.005, 1.0])
        assert_array_equal(default_lambdas(1), [1.0])

    def test_lengths_checked(self):
        with pytest.raises(ConfigurationError):
            LossConfig(3, 2, lambdas=[1.0, 1.0])
        with pytest.raises(ConfigurationError):
            LossConfig(3, 2, train_thresholds=[0.5])


class TestTrainMask(object):
    def test_confident_drops_out(self):
        p = [[0.05, 0.9, 0.05], [0.3, 0.4, 0.3]]
        assert_array_equal(train_mask(p, 1, [0.5]), [1.0, 0.0])

    def test_unsure_stays(self):
        p = [[0.4, 0.3, 0.3], [0.3, 0.4, 0.3]]
        assert_array_equal(train_mask(p, 1, [0.5]), [1.0, 1.0])

    def test_prefix_product_oracle(self, rng):
        for _ in range(1000):
            T, N = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            p = [rng.dirichlet(np.ones(3), size=N) for _ in range(T)]
            labels = rng.integers(0, 3, size=N)
            r = rng.uniform(size=T - 1)
            u = train_mask(p, labels, r)
            for n in range(N):
                expected = [1.0]
                for t in range(1, T):
                    keep = p[t - 1][n, labels[n]] < r[t - 1]
                    expected.append(expected[-1] * float(keep))
                assert_array_equal(u[n], expected)

    def test_non_increasing(self, rng):
        p = [rng.dirichlet(np.ones(4), size=10000) for _ in range(4)]
        labels = rng.integers(0, 4, size=10000)
        u = train_mask(p, labels, rng.uniform(size=3))
        assert np.all(np.diff(u, axis=1) <= 0)
        assert_array_equal(u[:, 0], 1.0)

    def test_open_thresholds(self, rng):
        p = [rng.dirichlet(np.ones(3), size=50) for _ in range(3)]
        u = train_mask(p, rng.integers(0, 3, size=50), [1.0, 1.0])
        assert_array_equal(u, 1.0)

    def test_threshold_count(self):
        with pytest.raises(ConfigurationError):
            train_mask(one_hot_probs(3, 0.5), 1, [0.5])


class TestClsLoss(object):
    def test_perfect(self):
        loss = cls_loss([np.array([0.0, 1.0])], 1, LossConfig(1, 1))
        assert loss.item() == 0.0

    def test_one_nat(self):
        p = np.array([1.0 - math.exp(-1.0), math.exp(-1.0)])
        loss = cls_loss([p], 1, LossConfig(1, 1))
        assert_allclose(loss.item(), 1.0, rtol=1e-12)

    def test_scalar_oracle(self, rng):
        for _ in range(100):
            T = int(rng.integers(1, 5))
            cfg = LossConfig(T, 3, train_thresholds=rng.uniform(size=T - 1))
            p = [rng.dirichlet(np.ones(4)) for _ in range(T)]
            k = int(rng.integers(0, 4))
            u = train_mask(p, k, cfg.train_thresholds)
            expected = -sum(
                cfg.lambdas[t] * u[t] * math.log(p[t][k]) for t in range(T)
            )
            assert_allclose(cls_loss(p, k, cfg).item(), expected,
                            rtol=1e-12, atol=1e-15)

    def test_cross_entropy_at_one_stage(self, rng):
        scores = rng.normal(size=(6, 4))
        labels = rng.integers(0, 4, size=6)
        p = ops.softmax(Tensor(scores))
        shifted = scores - scores.max(axis=1, keepdims=True)
        log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        expected = -log_p[np.arange(6), labels].mean()
        assert_allclose(cls_loss([p], labels, LossConfig(1, 3)).item(),
                        expected, rtol=1e-12)

    def test_log_floor(self):
        loss = cls_loss([np.array([1.0, 0.0])], 1, LossConfig(1, 1))
        assert_allclose(loss.item(), -math.log(1e-12))


class TestBoxCoding(object):
    def test_identity(self):
        box = Box(10, 20, 30, 40)
        assert_array_equal(bbox_encode(box, box), np.zeros(4))

    def test_shift(self):
        offsets = bbox_encode(Box(0, 0, 10, 10), Box(5, 0, 10, 10))
        assert_array_equal(offsets, [0.5, 0.0, 0.0, 0.0])

    def test_zero_offsets(self):
        box = Box(10, 20, 30, 40)
        assert bbox_decode(box, np.zeros(4)) == box

    def test_double_width(self):
        decoded = bbox_decode(Box(10, 20, 30, 40), [0, 0, math.log(2.0), 0])
        assert_allclose(decoded.w, 60.0)
        assert decoded.h == 40.0

    def test_round_trip(self, rng):
        for _ in range(100):
            p = Box(*rng.uniform(1, 100, size=4))
            g = Box(*rng.uniform(1, 100, size=4))
            assert_allclose(bbox_decode(p, bbox_encode(p, g)), g, rtol=1e-12)

    def test_degenerate(self):
        with pytest.raises(ContractError):
            bbox_encode(Box(0, 0, 0, 10), Box(0, 0, 10, 10))


class TestLocLoss(object):
    def test_background(self):
        assert loc_loss(np.array([3.0, 1.0, 2.0, 0.5]), np.zeros(4),
                        0).item() == 0.0

    def test_inner(self):
        assert_allclose(
            loc_loss(np.array([0.5, 0, 0, 0]), np.zeros(4), 1).item(), 0.125
        )

    def test_outer(self):
        assert_allclose(
            loc_loss(np.array([2.0, 0, 0, 0]), np.zeros(4), 1).item(), 1.5
        )

    def test_smooth_at_one(self):
        slopes = []
        for d in (1.0 - 1e-7, 1.0 + 1e-7):
            x = Tensor(np.array([d, 0.0, 0.0, 0.0]), requires_grad=True)
            loc_loss(x, np.zeros(4), 1).backward()
            slopes.append(x.grad[0])
        assert_allclose(slopes[0], slopes[1], atol=1e-6)
        value = loc_loss(np.array([1.0, 0, 0, 0]), np.zeros(4), 1).item()
        assert_allclose(value, 0.5)


class TestTotalLoss(object):
    def test_background_is_cls_only(self, rng):
        cfg = LossConfig(2, 2)
        p = [rng.dirichlet(np.ones(3), size=1) for _ in range(2)]
        regression = rng.normal(size=(1, 8))
        loss, report = total_loss(p, [0], regression, np.zeros((1, 4)), cfg)
        assert report.loc == 0.0
        assert_allclose(loss.item(), cls_loss(p, [0], cfg).item())

    def test_perfect(self):
        cfg = LossConfig(2, 2)
        p = [np.array([[0.0, 0.0, 1.0]])] * 2
        target = np.array([[0.1, -0.2, 0.3, 0.0]])
        regression = np.concatenate([np.zeros((1, 4)), target], axis=1)
        loss, report = total_loss(p, [2], regression, target, cfg)
        assert loss.item() == 0.0
        assert report.mask_counts == [1, 0]

    def test_componentwise(self, rng):
        cfg = LossConfig(3, 2)
        N = 6
        p = [rng.dirichlet(np.ones(3), size=N) for _ in range(3)]
        labels = np.array([0, 1, 2, 1, 0, 2])
        regression = rng.normal(size=(N, 8))
        targets = rng.normal(size=(N, 4)) * (labels > 0)[:, None]
        loss, report = total_loss(p, labels, regression, targets, cfg, step=7)

        picked = np.stack([
            regression[n, 4 * (k - 1):4 * k] if k else np.zeros(4)
            for n, k in enumerate(labels)
        ])
        expected = cls_loss(p, labels, cfg).item() + \
            loc_loss(picked, targets, labels).item()
        assert_allclose(loss.item(), expected, rtol=1e-12)
        assert_allclose(report.total, loss.item())
        assert_allclose(sum(report.cls_per_stage) + report.loc, report.total,
                        rtol=1e-12)
        assert report.step == 7
        assert report.mask_counts[0] == N
        assert sorted(report.to_dict()) == [
            'cls_per_stage', 'loc', 'mask_counts', 'step', 'total'
        ]

    def test_masked_stage_gets_no_gradient(self, rng):
        chain = ChainParams.new([4, 4], 2, rng)
        for p in chain.parameters():
            p.data = rng.normal(size=p.shape)
        cfg = LossConfig(2, 2, train_thresholds=[0.0])
        o = [Tensor(rng.normal(size=(1, 4))) for _ in range(2)]
        before = chain.classifiers[1].weight.data.copy()

        params = list(chain.parameters())
        zero_grad(params)
        _, _, _, probs = chain_forward(o, chain)
        assert_array_equal(train_mask(probs, [1], [0.0]), [[1.0, 0.0]])
        cls_loss(probs, [1], cfg).backward()
        assert_array_equal(chain.classifiers[1].weight.grad, 0.0)
        assert_array_equal(chain.classifiers[1].bias.grad, 0.0)
        assert np.any(chain.classifiers[0].weight.grad != 0.0)

        sgd_step(params, lr=0.1, weight_decay=0.0)
        assert_array_equal(chain.classifiers[1].weight.data, before)




def random_head(rng, K=2, C=3, C1=4, image=40, stride=8):
    """
    A random head configuration: 1-4 stages with random pooled sizes and
    contexts, 1-3 boxes anywhere in the image and random labels.
    """
    T = int(rng.integers(1, 5))
    featmap = Parameter(
        rng.normal(size=(C, image // stride, image // stride)), 'featmap'
    )
    specs = []
    for t in range(1, T + 1):
        head = StageHead(t, he_normal(rng, (C1, C, 3, 3)),
                         rng.normal(scale=0.1, size=C1))
        specs.append(StageSpec(t, int(rng.integers(1, 4)),
                               float(rng.uniform(0.0, 1.7)), head))
    chain = ChainParams.new([C1] * T, K, rng)
    for p in chain.parameters():
        p.data = p.data + rng.normal(scale=0.3, size=p.shape)
    regressor = Classifier.new('bbox', C1, 4 * K, rng, std=0.3)

    n = int(rng.integers(1, 4))
    boxes = []
    for _ in range(n):
        x1, y1 = rng.uniform(0, image - 10, size=2)
        x2 = x1 + rng.uniform(6, image - x1)
        y2 = y1 + rng.uniform(6, image - y1)
        boxes.append(Box.from_corners(x1, y1, x2, y2))
    labels = rng.integers(0, K + 1, size=n)
    targets = rng.normal(scale=0.2, size=(n, 4)) * (labels > 0)[:, None]
    cfg = LossConfig(T, K, train_thresholds=[0.95] * (T - 1))
    return featmap, specs, chain, regressor, boxes, labels, targets, cfg


@pytest.mark.parametrize('seed', range(50))
def test_full_head_gradient(seed):
    """
    roi pooling, stage heads, chaining and the joint loss, checked end to
    end against finite differences on a random configuration.
    """
    rng = np.random.default_rng(seed)
    featmap, specs, chain, regressor, boxes, labels, targets, cfg = \
        random_head(rng)

    def fn():
        o = [s.features(featmap, boxes, 40, 40, 8) for s in specs]
        f, _, _, probs = chain_forward(o, chain)
        loss, _ = total_loss(probs, labels, regressor(f[-1]), targets, cfg)
        return loss

    tensors = [featmap] + [p for s in specs for p in s.head.parameters()] \
        + list(chain.parameters()) + list(regressor.parameters())
    report = finite_diff_check(fn, tensors, step=1e-6, tolerance=1e-4)
    assert report.passed, report.errors
