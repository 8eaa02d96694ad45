# -*- coding: utf8 -*-
import os
import json

import pytest

from ccnet import config
from ccnet.__main__ import main
from ccnet.services.modes import MODE_ORDER


def run_dir(tmp_path, mode='chained_cascade', seed=0, out='out'):
    return os.path.join(str(tmp_path), out, mode, 'seed-{0}'.format(seed))


def ccnet(*args):
    return main(['ccnet'] + list(args))


def test_modes(capsys):
    assert ccnet('modes') == 0
    out = capsys.readouterr().out
    assert [line.split()[0] for line in out.splitlines()] == list(MODE_ORDER)


def test_bad_arguments(capsys):
    assert ccnet('train') == 2
    assert ccnet('frobnicate') == 2


def test_unknown_mode(tiny_config_path):
    assert ccnet('train', '--config', tiny_config_path, '--mode',
                 'bogus') == 1


def test_invalid_config(tmp_path):
    path = tmp_path / 'broken.yaml'
    path.write_text('mode: chained_cascade\nseeds: [0]\n')
    assert ccnet('train', '--config', str(path)) == 1


def test_missing_checkpoint(tiny_config_path):
    assert ccnet('eval', '--config', tiny_config_path) == 1


class TestPipeline(object):
    def test_train(self, tiny_config_path, tmp_path):
        assert ccnet('train', '--config', tiny_config_path) == 0
        out = run_dir(tmp_path)
        for name in (config.CHECKPOINT_NAME, config.TRAIN_LOG_NAME,
                     config.RESOLVED_CONFIG_NAME):
            assert os.path.exists(os.path.join(out, name)), name

    def test_rerun_skips(self, tiny_config_path, tmp_path):
        assert ccnet('train', '--config', tiny_config_path) == 0
        path = os.path.join(run_dir(tmp_path), config.CHECKPOINT_NAME)
        os.utime(path, (0, 0))

        assert ccnet('train', '--config', tiny_config_path) == 0
        assert os.stat(path).st_mtime == 0

        assert ccnet('train', '--config', tiny_config_path,
                     '--overwrite') == 0
        assert os.stat(path).st_mtime != 0

    def test_deterministic(self, tiny_config_path, tmp_path):
        for out in ('a', 'b'):
            assert ccnet('train', '--config', tiny_config_path, '--out',
                         str(tmp_path / out)) == 0
        checkpoints = []
        for out in ('a', 'b'):
            path = os.path.join(run_dir(tmp_path, out=out),
                                config.CHECKPOINT_NAME)
            with open(path, 'rb') as fin:
                checkpoints.append(fin.read())
        assert checkpoints[0] == checkpoints[1]

    def test_calibrate_and_eval(self, tiny_config_path, tmp_path, capsys):
        assert ccnet('train', '--config', tiny_config_path) == 0
        assert ccnet('calibrate', '--config', tiny_config_path,
                     '--rates', '0') == 0
        out = run_dir(tmp_path)
        with open(os.path.join(out, config.THRESHOLDS_NAME)) as fin:
            calibration = json.load(fin)
        assert calibration['thresholds'] == [0.0, 0.0]
        assert calibration['mode'] == 'chained_cascade'

        capsys.readouterr()
        assert ccnet('eval', '--config', tiny_config_path) == 0
        printed = json.loads(capsys.readouterr().out)
        with open(os.path.join(out, config.EVAL_REPORT_NAME)) as fin:
            assert json.load(fin) == printed
        assert printed['thresholds'] == [0.0, 0.0]

    def test_eval_thresholds(self, tiny_config_path, tmp_path, capsys):
        assert ccnet('train', '--config', tiny_config_path) == 0
        thresholds = tmp_path / 'strict.json'
        thresholds.write_text(json.dumps({'thresholds': [1.0, 1.0]}))

        capsys.readouterr()
        assert ccnet('eval', '--config', tiny_config_path, '--thresholds',
                     str(thresholds)) == 0
        printed = json.loads(capsys.readouterr().out)
        assert printed['map'] == 0.0
        assert printed['detections'] == 0

        thresholds.write_text(json.dumps([0.5]))
        assert ccnet('eval', '--config', tiny_config_path, '--thresholds',
                     str(thresholds), '--overwrite') == 1

    def test_report(self, tiny_config_path, tmp_path, capsys):
        assert ccnet('train', '--config', tiny_config_path) == 0
        assert ccnet('eval', '--config', tiny_config_path) == 0
        capsys.readouterr()

        root = str(tmp_path / 'out')
        assert ccnet('report', root) == 0
        assert 'chained_cascade' in capsys.readouterr().out
        with open(os.path.join(root, config.ABLATION_TABLE_NAME)) as fin:
            lines = fin.read().splitlines()
        assert len(lines) == 1 + len(MODE_ORDER)

        # Uncalibrated thresholds reject nothing, over the stage budget.
        assert ccnet('report', root, '--overwrite', '--strict') == 1

    def test_report_missing_dir(self, tmp_path):
        assert ccnet('report', str(tmp_path / 'nowhere')) == 1


class TestDataset(object):
    def test_needs_cache(self, tiny_config_path):
        assert ccnet('dataset', '--config', tiny_config_path) == 1

    def test_writes_cache(self, tiny_config_path, tmp_path):
        text = open(tiny_config_path).read().replace(
            'data:\n', 'data:\n  cache: {0}\n'.format(tmp_path / 'cache')
        )
        with open(tiny_config_path, 'w') as fout:
            fout.write(text)

        assert ccnet('dataset', '--config', tiny_config_path) == 0
        assert len(os.listdir(str(tmp_path / 'cache'))) == 3


@pytest.mark.parametrize('flag', ['--help', '--version'])
def test_info_flags(flag, capsys):
    with pytest.raises(SystemExit):
        ccnet(flag)
