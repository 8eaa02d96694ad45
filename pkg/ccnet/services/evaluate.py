# -*- coding: utf8 -*-
__all__ = (
    'EvalReport',
    'evaluate',
    'evaluate_scene',
    'run_cascade',
    'scene_proposals',
    'ungated'
)
import json
import logging
import multiprocessing

import numpy as np

from ccnet.autograd import no_grad
from ccnet.errors import ConfigurationError
from ccnet.models.box import bbox_decode
from ccnet.services.metrics import Detection, map_eval, nms
from ccnet.services.proposals import gen_proposals

logger = logging.getLogger(__name__)

#: Mixed into proposal seeds so evaluation and calibration never reuse
#: training proposals.
PROPOSAL_SALT = {'test': 1, 'calib': 2}


def scene_proposals(cfg, scene, seed, index, split='test'):
    data = cfg.data
    return gen_proposals(
        scene, data.proposals_per_image, data.jitter, data.neg_fraction,
        seed=[seed, PROPOSAL_SALT[split], index]
    )


def run_cascade(net, image, boxes, thresholds=None):
    """
    Cascade traces of every box in one image. Stage features are computed
    in one batch; the cascade itself runs per RoI.
    """
    with no_grad():
        o = [x.data for x in net.stage_features(image, boxes)]
    return [
        net.infer([o_t[i] for o_t in o], thresholds=thresholds)
        for i in range(len(boxes))
    ]


def _detections(net, index, proposals, gated, image_w, image_h, floor):
    out = []
    for (box, _), trace in zip(proposals, gated):
        if trace.rejected or trace.final_stage_reached != net.stages:
            continue
        p = trace.probs
        offsets = net.regress(trace.stages[-1].f)
        for k in range(1, net.num_classes + 1):
            if p[k] < floor:
                continue
            decoded = bbox_decode(box, offsets[k - 1])
            x1, y1, x2, y2 = decoded.corners
            if min(x2, image_w) <= max(x1, 0) \
                    or min(y2, image_h) <= max(y1, 0):
                continue
            out.append(Detection(
                index, decoded.clamp(image_w, image_h), k, float(p[k])
            ))
    return out


def evaluate_scene(net, cfg, seed, index, scene, thresholds, split='test'):
    """
    Everything evaluation needs from one image: raw detections, and per
    RoI its label, the gated trace and the ungated trace.
    """
    proposals = scene_proposals(cfg, scene, seed, index, split)
    boxes = [b for b, _ in proposals]
    labels = [t.label for _, t in proposals]
    gated = run_cascade(net, scene.image, boxes, thresholds)
    full = run_cascade(net, scene.image, boxes, ungated(net))
    image_w, image_h = scene.size
    detections = _detections(
        net, index, proposals, gated, image_w, image_h, cfg.eval.score_floor
    )
    return {
        'index': index,
        'detections': detections,
        'labels': labels,
        'gated': gated,
        'full': full
    }


def ungated(net):
    """
    Thresholds below every probability: the cascade never rejects.
    """
    return np.full(net.stages, -1.0)


_worker = {}


def _init_worker(net, cfg, seed, thresholds):
    _worker.update(net=net, cfg=cfg, seed=seed, thresholds=thresholds)


def _evaluate_one(item):
    index, scene = item
    return evaluate_scene(
        _worker['net'], _worker['cfg'], _worker['seed'], index, scene,
        _worker['thresholds']
    )


def _stage_stats(results, T):
    labels = np.concatenate([r['labels'] for r in results]) \
        if results else np.zeros(0, dtype=np.int64)
    gated = [t for r in results for t in r['gated']]
    full = [t for r in results for t in r['full']]
    positive = labels > 0

    stages = []
    for t in range(T):
        reached = np.array([g.final_stage_reached > t for g in gated],
                           dtype=bool)
        rejected = np.array(
            [g.final_stage_reached == t + 1 and g.rejected for g in gated],
            dtype=bool
        )
        max_fg = np.array([f.stages[t].max_foreground for f in full])

        def rate(mask):
            n = int(np.sum(reached & mask))
            return float(np.sum(rejected & mask)) / n if n else 0.0

        def moments(mask):
            values = max_fg[mask] if max_fg.size else max_fg
            if not values.size:
                return 0.0, 0.0
            return float(values.mean()), float(values.var())

        pos_mean, pos_var = moments(positive)
        neg_mean, neg_var = moments(~positive)
        stages.append({
            'stage': t + 1,
            'neg_reject_rate': rate(~positive),
            'pos_reject_rate': rate(positive),
            'pos_mean': pos_mean,
            'pos_var': pos_var,
            'neg_mean': neg_mean,
            'neg_var': neg_var,
            'separation': pos_mean - neg_mean
        })

    evaluated = np.array([g.final_stage_reached for g in gated], dtype=float)

    def mean(values):
        return float(values.mean()) if values.size else 0.0

    early = np.array(
        [g.rejected for g, p in zip(gated, positive) if p], dtype=float
    )
    summary = {
        'mean_stages': mean(evaluated),
        'mean_stages_negative': mean(evaluated[~positive]),
        'mean_stages_positive': mean(evaluated[positive]),
        'pos_rejected_early': mean(early),
        'rois': int(labels.size),
        'positives': int(np.sum(positive))
    }
    return stages, summary


class EvalReport(object):
    """
    Detection quality plus per-stage cascade statistics of one evaluation.
    """
    KEYS = (
        'mode', 'seed', 'thresholds', 'ap', 'map', 'stages',
        'mean_stages', 'mean_stages_negative', 'mean_stages_positive',
        'pos_rejected_early', 'rois', 'positives', 'detections'
    )

    def __init__(self, **values):
        missing = set(self.KEYS) - set(values)
        if missing:
            raise ConfigurationError(
                'eval report lacks: {0}'.format(', '.join(sorted(missing)))
            )
        for key in self.KEYS:
            setattr(self, key, values[key])

    def to_dict(self):
        out = dict((key, getattr(self, key)) for key in self.KEYS)
        out['ap'] = dict((str(k), v) for k, v in sorted(self.ap.items()))
        return out

    @classmethod
    def from_dict(cls, values):
        values = dict(values)
        values['ap'] = dict((int(k), v) for k, v in values['ap'].items())
        return cls(**values)

    def save(self, path):
        with open(path, 'w') as fout:
            json.dump(self.to_dict(), fout, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fin:
            return cls.from_dict(json.load(fin))

    def __repr__(self):
        return '<EvalReport {0} seed={1} mAP={2:.4f}>'.format(
            self.mode, self.seed, self.map
        )


def evaluate(net, scenes, thresholds, cfg, mode_id, seed, trace_log=None):
    """
    Run the cascade over every proposal of every scene and score the
    surviving detections.

    :param thresholds: T inference thresholds (zeros: no rejection).
    :param trace_log: optional `TraceLog` receiving one trace per RoI.
    """
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if thresholds.shape != (net.stages,):
        raise ConfigurationError(
            'mode {0} runs {1} stages but got {2} thresholds'.format(
                mode_id, net.stages, thresholds.size
            )
        )

    items = list(enumerate(scenes))
    workers = cfg.eval.workers
    if workers > 1 and len(items) > 1:
        pool = multiprocessing.Pool(
            workers, _init_worker, (net, cfg, seed, thresholds)
        )
        try:
            # map keeps image order, so the merge is deterministic.
            results = pool.map(_evaluate_one, items)
        finally:
            pool.close()
            pool.join()
    else:
        results = [
            evaluate_scene(net, cfg, seed, i, scene, thresholds)
            for i, scene in items
        ]

    raw = [d for r in results for d in r['detections']]
    detections = nms(raw, cfg.eval.nms_iou)
    ap, mean_ap = map_eval(
        detections, [s.objects for s in scenes], cfg.eval.match_iou,
        num_classes=net.num_classes
    )
    stages, summary = _stage_stats(results, net.stages)

    if trace_log is not None:
        for r in results:
            for trace, label in zip(r['gated'], r['labels']):
                trace_log.log_trace(trace, image=r['index'], label=label)

    logger.info('Evaluated %s seed %d: mAP %.4f over %d images',
                mode_id, seed, mean_ap, len(scenes))
    return EvalReport(
        mode=mode_id,
        seed=seed,
        thresholds=thresholds.tolist(),
        ap=ap,
        map=mean_ap,
        stages=stages,
        detections=len(detections),
        **summary
    )
