# -*- coding: utf8 -*-
"""
Inference threshold calibration: pick r_t so that a target share of the
negatives still alive at stage t gets rejected there.
"""
__all__ = (
    'target_rates',
    'calibrate_thresholds',
    'rejection_rates',
    'calibrate'
)
import logging

import numpy as np

from ccnet.errors import ConfigurationError, ContractError
from ccnet.services.evaluate import run_cascade, scene_proposals, ungated

logger = logging.getLogger(__name__)


def target_rates(rates, T):
    """
    Expand a rejection target into T per-stage rates. One number applies
    to stages 1..T-1 and the last stage gets 0; a list must hold T rates.
    """
    if isinstance(rates, (list, tuple, np.ndarray)):
        rates = [float(r) for r in rates]
        if len(rates) == 1 and T != 1:
            rates = rates[0]
        elif len(rates) != T:
            raise ConfigurationError(
                'need one rejection rate or {0}, got {1}'.format(
                    T, len(rates)
                )
            )
    if not isinstance(rates, list):
        rates = [float(rates)] * (T - 1) + [0.0]
    if any(r < 0 or r > 1 for r in rates):
        raise ConfigurationError('rejection rates must lie in [0, 1]')
    return rates


def _max_foreground(traces, T):
    values = np.zeros((len(traces), T))
    for i, trace in enumerate(traces):
        if trace.final_stage_reached != T:
            raise ContractError(
                'calibration needs traces run without rejection'
            )
        values[i] = [s.max_foreground for s in trace.stages]
    return values


def calibrate_thresholds(traces, target_reject, labels=None, stages=None):
    """
    Per-stage thresholds from ungated traces.

    At stage t the max foreground probabilities of the negatives that
    survived stages 1..t-1 are sorted; with m = round(rate_t * n) of n
    survivors, r_t is the m-th smallest value, so the gate (which passes
    only values above r_t) rejects the m lowest. No survivors or m = 0
    gives r_t = 0.

    :param labels: RoI labels; only background RoIs (label 0) count. All
                   traces are treated as negatives when omitted.
    :param stages: T; read from the traces when omitted.
    """
    if stages is not None:
        T = stages
    elif traces:
        T = traces[0].final_stage_reached
    elif isinstance(target_reject, (list, tuple, np.ndarray)):
        T = len(target_reject)
    else:
        raise ConfigurationError(
            'no traces and a single rejection rate: pass stages'
        )
    rates = target_rates(target_reject, T)
    values = _max_foreground(traces, T)
    if labels is not None:
        values = values[np.asarray(labels) == 0]

    thresholds = np.zeros(T)
    alive = np.ones(values.shape[0], dtype=bool)
    for t in range(T):
        v = np.sort(values[alive, t])
        m = int(round(rates[t] * v.size))
        if v.size and m > 0:
            thresholds[t] = min(max(v[m - 1], 0.0), 1.0)
        alive &= values[:, t] > thresholds[t]
    return thresholds


def rejection_rates(traces, thresholds, labels=None):
    """
    Replay `thresholds` over ungated traces: for every stage the share of
    arriving negatives that it rejects.
    """
    T = len(thresholds)
    values = _max_foreground(traces, T) if traces else np.zeros((0, T))
    if labels is not None:
        values = values[np.asarray(labels) == 0]

    rates = []
    alive = np.ones(values.shape[0], dtype=bool)
    for t in range(T):
        passed = values[:, t] > thresholds[t]
        arrived = int(alive.sum())
        rates.append(
            float((alive & ~passed).sum()) / arrived if arrived else 0.0
        )
        alive &= passed
    return rates


def calibrate(net, scenes, cfg, seed, rates=None):
    """
    Calibrate `net` on `scenes` (the calibration split). Returns the
    thresholds file contents.
    """
    requested = cfg.calibrate.target_reject if rates is None else rates
    rates = target_rates(requested, net.stages)

    traces, labels = [], []
    for index, scene in enumerate(scenes):
        proposals = scene_proposals(cfg, scene, seed, index, split='calib')
        traces.extend(run_cascade(
            net, scene.image, [b for b, _ in proposals], ungated(net)
        ))
        labels.extend(t.label for _, t in proposals)

    negatives = sum(1 for k in labels if k == 0)
    if traces:
        thresholds = calibrate_thresholds(traces, rates, labels)
    else:
        thresholds = np.zeros(net.stages)
    realised = rejection_rates(traces, thresholds, labels)
    logger.info('Calibrated %d stages on %d negatives: %s', net.stages,
                negatives, ', '.join('%.4f' % r for r in thresholds))
    return {
        'thresholds': thresholds.tolist(),
        'target_reject': rates,
        'realised_reject': realised,
        'negatives': negatives
    }
