# -*- coding: utf-8 -*-
"""ccnet

Usage:
    ccnet train --config=<path> [--seed=<n>] [--overwrite] [options]
    ccnet calibrate --config=<path> [--rates=<rates>] [--seed=<n>] [--overwrite] [options]
    ccnet eval --config=<path> [--seed=<n>] [--overwrite] [options]
    ccnet report <run_dir> [--overwrite] [--strict]
    ccnet dataset --config=<path> [--seed=<n>] [--overwrite]
    ccnet modes
    ccnet (-h | --help)
    ccnet --version

Options:
    --config=<path>         Run configuration (YAML).
    --checkpoint=<path>     Checkpoint to calibrate or evaluate. Defaults to
                            checkpoint.ccnet in the run directory.
    --thresholds=<path>     Inference thresholds for eval. Defaults to
                            thresholds.json in the run directory, else no
                            rejection.
    --rates=<rates>         Negative rejection rate: one rate for stages
                            1..T-1, or a comma list of T rates.
    --mode=<mode>           Ablation mode; overrides the config.
    --seed=<n>              Run only this seed; overrides the config.
    --out=<dir>             Output root; overrides the config.
    --overwrite             Replace outputs that already exist.
    --strict                Exit with status 1 when the ablation table breaks
                            an expected trend.
    -h --help               Show this screen.
    --version               Show the version.

Outputs live in <out>/<mode>/seed-<n>/. Set CC_NET_LOG to change the log
level.
"""
import os
import sys
import json
import shutil
import logging

from docopt import docopt, DocoptExit

from ccnet import config, configure_logging, runconfig
from ccnet.autograd import checkpoint
from ccnet.errors import CCNetError, ConfigurationError
from ccnet.services import report
from ccnet.services.calibrate import calibrate
from ccnet.services.dataset import SPLITS, cache_path, dataset_split
from ccnet.services.evaluate import evaluate
from ccnet.services.modes import Mode, get_mode, mode_names
from ccnet.services.steplog import TraceLog
from ccnet.services.trainer import train
from ccnet.util.pretty import format_table, plural
from ccnet.version import __version__

logger = logging.getLogger('ccnet.cli')


def load_config(args):
    """
    The run config named by ``--config`` with command-line overrides.
    """
    cfg = runconfig.load(args['--config'])
    changes = {}
    if args.get('--mode'):
        changes['mode'] = args['--mode']
    if args.get('--seed') is not None:
        try:
            changes['seeds'] = [int(args['--seed'])]
        except ValueError:
            raise ConfigurationError(
                '--seed must be an integer, got {0!r}'.format(args['--seed'])
            )
    if args.get('--out'):
        changes['output'] = args['--out']
    if changes:
        cfg = cfg.replace(**changes)
    get_mode(cfg.mode)
    return cfg


def _exists(path, args):
    """
    True (and logged) when `path` is present and may not be replaced.
    """
    if os.path.exists(path) and not args['--overwrite']:
        logger.info('%s exists, skipping (use --overwrite)', path)
        return True
    return False


def _ensure_dir(path):
    if not os.path.isdir(path):
        os.makedirs(path)


def _restore(cfg, mode, seed, args):
    run_dir = cfg.run_dir(mode.SERVICE_ID, seed)
    path = args.get('--checkpoint') or os.path.join(
        run_dir, config.CHECKPOINT_NAME
    )
    if not os.path.exists(path):
        raise ConfigurationError('no checkpoint at {0}'.format(path))
    net = mode.build(cfg, seed)
    checkpoint.restore(net.parameters(), path)
    return net, path


def _parse_rates(text):
    try:
        rates = [float(r) for r in text.split(',')]
    except ValueError:
        raise ConfigurationError(
            '--rates must be numbers separated by commas, got {0!r}'.format(
                text
            )
        )
    return rates[0] if len(rates) == 1 else rates


def read_thresholds(path, T):
    with open(path) as fin:
        data = json.load(fin)
    values = data['thresholds'] if isinstance(data, dict) else data
    if len(values) != T:
        raise ConfigurationError(
            'thresholds file {0} has {1} entries, the cascade has {2} '
            'stages'.format(path, len(values), T)
        )
    return [float(v) for v in values]


def cmd_train(args):
    cfg = load_config(args)
    mode = get_mode(cfg.mode)
    for seed in cfg.seeds:
        run_dir = cfg.run_dir(mode.SERVICE_ID, seed)
        if _exists(os.path.join(run_dir, config.CHECKPOINT_NAME), args):
            continue
        _ensure_dir(run_dir)
        with open(os.path.join(run_dir, config.RESOLVED_CONFIG_NAME),
                  'w') as fout:
            fout.write(cfg.dump())
        result = train(cfg, mode, seed, run_dir)
        logger.info('Seed %d done after %s, checkpoint %s', seed,
                    plural(len(result.reports), '{v} step', '{v} steps'),
                    result.checkpoint)
    return 0


def cmd_calibrate(args):
    cfg = load_config(args)
    mode = get_mode(cfg.mode)
    rates = _parse_rates(args['--rates']) if args['--rates'] else None
    for seed in cfg.seeds:
        run_dir = cfg.run_dir(mode.SERVICE_ID, seed)
        out = os.path.join(run_dir, config.THRESHOLDS_NAME)
        if _exists(out, args):
            continue
        net, path = _restore(cfg, mode, seed, args)
        result = calibrate(
            net, dataset_split(cfg, seed, 'calib'), cfg, seed, rates=rates
        )
        result.update(mode=mode.SERVICE_ID, seed=seed, checkpoint=path)
        _ensure_dir(run_dir)
        with open(out, 'w') as fout:
            json.dump(result, fout, indent=2, sort_keys=True)
        logger.info('Wrote %s', out)
    return 0


def cmd_eval(args):
    cfg = load_config(args)
    mode = get_mode(cfg.mode)
    for seed in cfg.seeds:
        run_dir = cfg.run_dir(mode.SERVICE_ID, seed)
        out = os.path.join(run_dir, config.EVAL_REPORT_NAME)
        if _exists(out, args):
            continue
        net, _ = _restore(cfg, mode, seed, args)

        path = args.get('--thresholds') or os.path.join(
            run_dir, config.THRESHOLDS_NAME
        )
        if os.path.exists(path):
            net.chain.set_thresholds(read_thresholds(path, net.stages))
        elif args.get('--thresholds'):
            raise ConfigurationError('no thresholds at {0}'.format(path))

        trace_log = None
        if cfg.eval.write_traces:
            trace_log = TraceLog(os.path.join(run_dir, config.TRACE_LOG_NAME))
        try:
            result = evaluate(
                net, dataset_split(cfg, seed, 'test'), net.chain.thresholds,
                cfg, mode.SERVICE_ID, seed, trace_log=trace_log
            )
        finally:
            if trace_log is not None:
                trace_log.close()
        result.save(out)
        print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_report(args):
    run_dir = args['<run_dir>']
    if not os.path.isdir(run_dir):
        raise ConfigurationError('no run directory at {0}'.format(run_dir))
    out = os.path.join(run_dir, config.ABLATION_TABLE_NAME)
    if _exists(out, args):
        return 0
    rows = report.collect(run_dir)
    report.write_csv(rows, out)
    print(format_table(rows, report.COLUMNS))
    failures = report.check_ablation(rows)
    for failure in failures:
        logger.warning('Ablation trend: %s', failure)
    return 1 if failures and args['--strict'] else 0


def cmd_dataset(args):
    cfg = load_config(args)
    if not cfg.data.cache:
        raise ConfigurationError('data.cache is not set', path='data.cache')
    for seed in cfg.seeds:
        for split in sorted(SPLITS):
            path = cache_path(cfg, seed, split)
            if _exists(path, args):
                continue
            if os.path.exists(path):
                shutil.rmtree(path)
            dataset_split(cfg, seed, split, refresh=True)
    return 0


def cmd_modes(args):
    for name in mode_names():
        print('{0:34} {1}'.format(name, Mode.services[name].description()))
    return 0


COMMANDS = (
    ('train', cmd_train),
    ('calibrate', cmd_calibrate),
    ('eval', cmd_eval),
    ('report', cmd_report),
    ('dataset', cmd_dataset),
    ('modes', cmd_modes)
)


def main(argv):
    try:
        args = docopt(__doc__, argv=argv[1:], version=__version__)
    except DocoptExit as e:
        print(e, file=sys.stderr)
        return 2

    configure_logging()
    try:
        for name, command in COMMANDS:
            if args[name]:
                return command(args)
    except CCNetError as e:
        logger.error('%s', e)
        return 1
    except Exception:
        logger.exception('Unexpected failure',
                         extra={'data': {'argv': argv[1:]}})
        return 1
    return 2


def run():
    sys.exit(main(sys.argv))


if __name__ == '__main__':
    run()
