# -*- coding: utf8 -*-
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ccnet.errors import ConfigurationError, ContractError
from ccnet.services.calibrate import (
    calibrate,
    calibrate_thresholds,
    rejection_rates,
    target_rates
)
from ccnet.services.dataset import dataset_split
from ccnet.services.modes import get_mode

from conftest import make_trace

TEN = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95]


class TestTargetRates(object):
    def test_scalar(self):
        assert target_rates(0.3, 4) == [0.3, 0.3, 0.3, 0.0]
        assert target_rates(0.3, 1) == [0.0]

    def test_list(self):
        assert target_rates([0.1, 0.2], 2) == [0.1, 0.2]
        assert target_rates([0.25], 3) == [0.25, 0.25, 0.0]

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            target_rates([0.1, 0.2], 3)
        with pytest.raises(ConfigurationError):
            target_rates(1.5, 3)


class TestCalibrateThresholds(object):
    def test_sort_oracle(self):
        traces = [make_trace([m, 0.5]) for m in TEN]
        r = calibrate_thresholds(traces, [0.3, 0.0])
        assert r[0] == 0.25
        assert r[1] == 0.0
        rejected = [m for m in TEN if not m > r[0]]
        assert rejected == [0.05, 0.15, 0.25]

    def test_zero_target(self, rng):
        traces = [make_trace(rng.uniform(size=3)) for _ in range(20)]
        assert_array_equal(calibrate_thresholds(traces, [0, 0, 0]), 0.0)

    def test_positives_ignored(self):
        traces = [make_trace([m, 0.5]) for m in TEN] + \
            [make_trace([0.01, 0.5]) for _ in range(5)]
        labels = [0] * 10 + [1] * 5
        r = calibrate_thresholds(traces, [0.3, 0.0], labels)
        assert r[0] == 0.25

    def test_replay(self, rng):
        traces = [make_trace(rng.uniform(size=3)) for _ in range(200)]
        target = [0.3, 0.3, 0.0]
        r = calibrate_thresholds(traces, target)
        realised = rejection_rates(traces, r)

        values = np.array([[s.max_foreground for s in t.stages]
                           for t in traces])
        alive = np.ones(len(traces), dtype=bool)
        for t in range(3):
            arrived = alive.sum()
            assert abs(realised[t] - target[t]) <= 1.0 / arrived
            alive &= values[:, t] > r[t]

    def test_empty_survivors(self):
        traces = [make_trace([0.1, 0.2]) for _ in range(3)]
        r = calibrate_thresholds(traces, [1.0, 0.5])
        assert r[0] == 0.1
        assert r[1] == 0.0

    def test_no_traces(self):
        assert_array_equal(calibrate_thresholds([], 0.3, stages=3), [0, 0, 0])
        assert_array_equal(calibrate_thresholds([], [0.3, 0.0]), [0, 0])
        with pytest.raises(ConfigurationError) as e:
            calibrate_thresholds([], 0.3)
        assert 'stages' in str(e.value)

    def test_gated_traces_refused(self):
        gated = make_trace([0.1], passed=[False])
        with pytest.raises(ContractError):
            calibrate_thresholds([gated, make_trace([0.2, 0.3])], [0.3, 0.0],
                                 stages=2)


class TestCalibrate(object):
    def test_zero_rates(self, tiny_cfg):
        mode = get_mode('chained_cascade')
        net = mode.build(tiny_cfg, 0)
        scenes = dataset_split(tiny_cfg, 0, 'calib')
        result = calibrate(net, scenes, tiny_cfg, 0, rates=0.0)
        assert result['thresholds'] == [0.0, 0.0]
        assert result['target_reject'] == [0.0, 0.0]
        assert result['realised_reject'] == [0.0, 0.0]
        assert 0 < result['negatives'] <= 3 * 4

    def test_config_rates(self, tiny_cfg):
        mode = get_mode('chained_cascade')
        net = mode.build(tiny_cfg, 0)
        scenes = dataset_split(tiny_cfg, 0, 'calib')
        result = calibrate(net, scenes, tiny_cfg, 0)
        assert result['target_reject'] == [0.3, 0.0]
        assert len(result['thresholds']) == 2
        assert all(0 <= r <= 1 for r in result['thresholds'])
        assert_allclose(result['realised_reject'][0], 0.3,
                        atol=1.0 / result['negatives'])
