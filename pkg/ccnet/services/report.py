# -*- coding: utf8 -*-
"""
The ablation table: one row per mode, averaged over every seed that has an
evaluation report under the run directory.
"""
__all__ = ('COLUMNS', 'collect', 'check_ablation', 'write_csv', 'read_csv')
import os
import csv
import glob
import logging

import numpy as np

from ccnet import config
from ccnet.services.evaluate import EvalReport
from ccnet.services.modes import MODE_ORDER

logger = logging.getLogger(__name__)

#: Column order of ``ablation.csv``. Every column is always present.
#:
#: mode                  ablation mode id
#: status                ``ok``, or ``absent`` when no report was found
#: seeds                 number of seeds averaged
#: map                   mean average precision at IoU 0.5
#: mean_stages           mean stages evaluated per RoI
#: mean_stages_negative  mean stages evaluated per negative RoI
#: neg_reject_rate       negative rejection rate, averaged over stages
#: pos_rejected_early    share of positives rejected before the last stage
#: separation_first      positive minus negative mean max-fg prob, stage 1
#: separation_last       the same at the last stage
COLUMNS = (
    'mode',
    'status',
    'seeds',
    'map',
    'mean_stages',
    'mean_stages_negative',
    'neg_reject_rate',
    'pos_rejected_early',
    'separation_first',
    'separation_last'
)

#: ``(a, b)``: mode a should reach at least the mAP of mode b.
MAP_ORDER = (
    ('chained_cascade', 'conventional_cascade'),
    ('conventional_cascade', 'single_stage_baseline'),
    ('chained_cascade', 'chained_cascade_no_feature_chain')
)
#: mAP lead of the chained cascade over the single stage baseline.
MAP_MARGIN = 0.02
#: Fewest seeds a row needs before its mAP is compared.
MIN_SEEDS = 3
#: Largest mean share of the T stages a negative RoI may run.
STAGE_BUDGET = 0.8
#: Largest share of positives a cascade may reject before stage T.
POS_REJECT_LIMIT = 0.02


def _row(mode, reports):
    if not reports:
        row = dict((c, '') for c in COLUMNS)
        row.update(mode=mode, status='absent', seeds=0)
        return row

    def mean(values):
        return float(np.mean(values))

    return {
        'mode': mode,
        'status': 'ok',
        'seeds': len(reports),
        'map': mean([r.map for r in reports]),
        'mean_stages': mean([r.mean_stages for r in reports]),
        'mean_stages_negative': mean(
            [r.mean_stages_negative for r in reports]
        ),
        'neg_reject_rate': mean([
            np.mean([s['neg_reject_rate'] for s in r.stages])
            for r in reports
        ]),
        'pos_rejected_early': mean([r.pos_rejected_early for r in reports]),
        'separation_first': mean(
            [r.stages[0]['separation'] for r in reports]
        ),
        'separation_last': mean(
            [r.stages[-1]['separation'] for r in reports]
        ),
        # Not written to the csv.
        'separation': np.mean(
            [[s['separation'] for s in r.stages] for r in reports], axis=0
        ).tolist()
    }


def collect(run_dir, modes=MODE_ORDER):
    """
    One row per mode from ``<run_dir>/<mode>/seed-*/eval.json``.
    """
    rows = []
    for mode in modes:
        pattern = os.path.join(
            run_dir, mode, 'seed-*', config.EVAL_REPORT_NAME
        )
        reports = [EvalReport.load(p) for p in sorted(glob.glob(pattern))]
        if not reports:
            logger.warning('No evaluation reports for mode %s', mode)
        rows.append(_row(mode, reports))
    return rows


def check_ablation(rows):
    """
    Test `rows` for the trends the ablation should show and return one
    message per broken property; an empty list means all hold. Absent
    modes are skipped.

    mAP has to follow `MAP_ORDER`, with the chained cascade at least
    `MAP_MARGIN` above the single stage baseline, once both rows average
    `MIN_SEEDS` seeds. Every row of two or more stages needs a score
    separation that never shrinks from one stage to the next and ends
    above where it started, at most `STAGE_BUDGET` * T stages per
    negative and at most `POS_REJECT_LIMIT` of positives rejected early.
    """
    ok = dict((r['mode'], r) for r in rows if r['status'] == 'ok')
    failures = []

    def compared(a, b):
        return a in ok and b in ok and \
            min(ok[a]['seeds'], ok[b]['seeds']) >= MIN_SEEDS

    for a, b in MAP_ORDER:
        if compared(a, b) and ok[a]['map'] < ok[b]['map']:
            failures.append(
                '{0} mAP {1:.4f} is below {2} mAP {3:.4f}'.format(
                    a, ok[a]['map'], b, ok[b]['map']
                )
            )
    chained, baseline = 'chained_cascade', 'single_stage_baseline'
    if compared(chained, baseline):
        lead = ok[chained]['map'] - ok[baseline]['map']
        if lead < MAP_MARGIN:
            failures.append(
                '{0} leads {1} by {2:.4f} mAP, less than {3}'.format(
                    chained, baseline, lead, MAP_MARGIN
                )
            )

    for mode, row in ok.items():
        separation = row['separation']
        T = len(separation)
        if T < 2:
            continue
        steps = np.diff(separation)
        if np.any(steps < 0):
            stage = int(np.argmax(steps < 0)) + 2
            failures.append(
                '{0}: separation drops at stage {1}'.format(mode, stage)
            )
        elif separation[-1] <= separation[0]:
            failures.append(
                '{0}: separation does not grow over the cascade'.format(mode)
            )
        if row['mean_stages_negative'] > STAGE_BUDGET * T:
            failures.append(
                '{0}: negatives run {1:.2f} of {2} stages, over {3:.2f}'
                .format(mode, row['mean_stages_negative'], T, STAGE_BUDGET * T)
            )
        if row['pos_rejected_early'] > POS_REJECT_LIMIT:
            failures.append(
                '{0}: {1:.2%} of positives rejected early, over {2:.0%}'
                .format(mode, row['pos_rejected_early'], POS_REJECT_LIMIT)
            )
    return failures


def write_csv(rows, path):
    with open(path, 'w', newline='') as fout:
        writer = csv.DictWriter(fout, fieldnames=COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(dict((c, row.get(c, '')) for c in COLUMNS))


def read_csv(path):
    with open(path, newline='') as fin:
        return list(csv.DictReader(fin))
