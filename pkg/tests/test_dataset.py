# -*- coding: utf8 -*-
import os
from collections import Counter

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from ccnet.errors import ConfigurationError
from ccnet.services.dataset import (
    MAX_CLASSES,
    class_style,
    dataset_split,
    load_dataset,
    save_dataset,
    synth_dataset
)


class TestSynthDataset(object):
    def test_deterministic(self):
        a = synth_dataset(7, 4, 3, 32)
        b = synth_dataset(7, 4, 3, 32)
        for x, y in zip(a, b):
            assert_array_equal(x.image, y.image)
            assert x.objects == y.objects
        c = synth_dataset(8, 4, 3, 32)
        assert not np.array_equal(a[0].image, c[0].image)

    def test_empty(self):
        assert synth_dataset(0, 0, 3, 32) == []

    def test_class_count(self):
        with pytest.raises(ConfigurationError):
            synth_dataset(0, 3, 1, 32)
        with pytest.raises(ConfigurationError):
            synth_dataset(0, 3, MAX_CLASSES + 1, 32)

    def test_balanced(self):
        scenes = synth_dataset(3, 500, 8, 32)
        counts = Counter(k for s in scenes for k in s.labels)
        assert sorted(counts) == list(range(1, 9))
        mean = np.mean(list(counts.values()))
        for k, n in counts.items():
            assert 0.9 * mean <= n <= 1.1 * mean, (k, n, mean)

    def test_objects_inside(self):
        for scene in synth_dataset(5, 30, 4, 48):
            assert scene.image.shape == (3, 48, 48)
            assert 1 <= len(scene.objects) <= 3
            for box, label in scene.objects:
                x1, y1, x2, y2 = box.corners
                assert 0 <= x1 < x2 <= 48 and 0 <= y1 < y2 <= 48
                assert 1 <= label <= 4

    def test_styles_distinct(self):
        styles = [class_style(k) for k in range(1, MAX_CLASSES + 1)]
        assert len(set(styles)) == MAX_CLASSES


class TestCache(object):
    def test_save_load(self, tmp_path):
        scenes = synth_dataset(1, 3, 3, 32)
        save_dataset(str(tmp_path / 'set'), scenes, {'split': 'train'})
        loaded = load_dataset(str(tmp_path / 'set'))
        assert len(loaded) == 3
        for x, y in zip(scenes, loaded):
            assert_array_equal(x.image, y.image)
            assert x.objects == y.objects
            assert x.seed == y.seed

    def test_bad_index(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_dataset(str(tmp_path))
        (tmp_path / 'index.json').write_text('{"version": 99}')
        with pytest.raises(ConfigurationError):
            load_dataset(str(tmp_path))

    def test_split_cache(self, tiny_cfg, tmp_path):
        data = dict(tiny_cfg.data, cache=str(tmp_path / 'cache'))
        cfg = tiny_cfg.replace(data=data)
        first = dataset_split(cfg, 0, 'train')
        assert len(os.listdir(str(tmp_path / 'cache'))) == 1
        again = dataset_split(cfg, 0, 'train')
        for x, y in zip(first, again):
            assert_array_equal(x.image, y.image)

        uncached = dataset_split(tiny_cfg, 0, 'train')
        assert_array_equal(uncached[0].image, first[0].image)

    def test_splits_differ(self, tiny_cfg):
        train = dataset_split(tiny_cfg, 0, 'train')
        test = dataset_split(tiny_cfg, 0, 'test')
        assert len(train) == 4 and len(test) == 3
        assert not np.array_equal(train[0].image, test[0].image)
        with pytest.raises(ConfigurationError):
            dataset_split(tiny_cfg, 0, 'val')
