# -*- coding: utf8 -*-
"""
VOC-style detection metrics: greedy per-class NMS, all-point interpolated
average precision and the matcher that produces the precision-recall curve.
"""
__all__ = ('Detection', 'nms', 'voc_ap', 'match_class', 'map_eval')
from collections import defaultdict, namedtuple

import numpy as np

from ccnet import config
from ccnet.models.box import iou

#: One scored box. `image` indexes the ground-truth list.
Detection = namedtuple('Detection', ['image', 'box', 'label', 'score'])


def nms(detections, iou_threshold=config.NMS_IOU):
    """
    Greedy non-maximum suppression, run separately per image and class:
    keep the best-scored detection, drop everything overlapping it by more
    than `iou_threshold`, repeat.
    """
    groups = defaultdict(list)
    for d in detections:
        groups[(d.image, d.label)].append(d)

    kept = []
    for key in sorted(groups):
        group = sorted(groups[key], key=lambda d: -d.score)
        while group:
            best = group.pop(0)
            kept.append(best)
            group = [
                d for d in group if iou(best.box, d.box) <= iou_threshold
            ]
    return kept


def voc_ap(recall, precision):
    """
    Area under the precision-recall curve with all-point interpolation.
    """
    # append sentinel values at both ends
    mrec = np.concatenate(([0.], recall, [1.]))
    mpre = np.concatenate(([0.], precision, [0.]))

    # compute precision integration ladder
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = np.maximum(mpre[i - 1], mpre[i])

    # look for recall value changes
    i = np.where(mrec[1:] != mrec[:-1])[0]

    return float(np.sum((mrec[i + 1] - mrec[i]) * mpre[i + 1]))


def match_class(detections, gt_boxes, iou_threshold=config.MATCH_IOU):
    """
    Mark each detection of one class as a true (1) or false (0) positive.

    Detections are visited in descending score order. Each one is compared
    with the best-overlapping ground truth of its image; it is a true
    positive when that overlap is at least `iou_threshold` and the ground
    truth has not been claimed yet. Returns ``(scores, tp)`` in visiting
    order.

    :param gt_boxes: mapping of image -> list of ground-truth boxes.
    """
    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    claimed = dict((image, [False] * len(boxes))
                   for image, boxes in gt_boxes.items())

    scores = np.zeros(len(order))
    tp = np.zeros(len(order))
    for rank, i in enumerate(order):
        d = detections[i]
        scores[rank] = d.score
        boxes = gt_boxes.get(d.image, [])
        if not boxes:
            continue
        overlaps = [iou(d.box, g) for g in boxes]
        j = int(np.argmax(overlaps))
        if overlaps[j] >= iou_threshold and not claimed[d.image][j]:
            claimed[d.image][j] = True
            tp[rank] = 1.0
    return scores, tp


def map_eval(detections, gt, iou_threshold=config.MATCH_IOU,
             num_classes=None):
    """
    Per-class AP and their mean.

    :param detections: `Detection` list.
    :param gt: one list of ``(Box, label)`` per image.
    :returns: ``(ap, mean_ap)`` where `ap` maps class -> AP. Classes with no
              ground truth are left out of both.
    """
    gt_by_class = defaultdict(lambda: defaultdict(list))
    for image, objects in enumerate(gt):
        for box, label in objects:
            gt_by_class[label][image].append(box)
    dets_by_class = defaultdict(list)
    for d in detections:
        dets_by_class[d.label].append(d)

    labels = range(1, num_classes + 1) if num_classes \
        else sorted(gt_by_class)
    ap = {}
    for label in labels:
        npos = sum(len(b) for b in gt_by_class[label].values())
        if npos == 0:
            continue
        _, tp = match_class(
            dets_by_class[label], gt_by_class[label], iou_threshold
        )
        if not tp.size:
            ap[label] = 0.0
            continue
        tp_cum = np.cumsum(tp)
        fp_cum = np.cumsum(1.0 - tp)
        recall = tp_cum / float(npos)
        precision = tp_cum / np.maximum(
            tp_cum + fp_cum, np.finfo(np.float64).eps
        )
        ap[label] = voc_ap(recall, precision)

    mean_ap = float(np.mean(list(ap.values()))) if ap else 0.0
    return ap, mean_ap
