# -*- coding: utf8 -*-
"""
Proposals stand in for a learned proposer: jittered ground-truth boxes as
positives, random low-overlap boxes as negatives.
"""
__all__ = ('gen_proposals', 'label_proposal', 'stack_targets')
import logging

import numpy as np

from ccnet.errors import ConfigurationError
from ccnet.models.box import Box, bbox_encode
from ccnet.models.objective import BoxTarget

logger = logging.getLogger(__name__)

#: A proposal takes the label of its best ground truth at this IoU.
POSITIVE_IOU = 0.5
#: Negatives overlap every ground truth less than this.
NEGATIVE_IOU = 0.3


def label_proposal(box, objects):
    """
    `BoxTarget` of `box`: the class of the best-overlapping ground truth
    if that IoU is at least 0.5, else background.
    """
    best, best_iou = None, 0.0
    for gt, label in objects:
        overlap = box.iou(gt)
        if overlap > best_iou:
            best, best_iou = (gt, label), overlap
    if best is None or best_iou < POSITIVE_IOU:
        return BoxTarget(0)
    gt, label = best
    return BoxTarget(label, bbox_encode(box, gt))


def _inside(box, image_w, image_h):
    x1, y1, x2, y2 = box.corners
    return x1 >= 0 and y1 >= 0 and x2 <= image_w and y2 <= image_h


def _jitter(rng, gt, jitter, image_w, image_h):
    if jitter == 0:
        return gt
    if not 0 < jitter <= 0.5:
        raise ConfigurationError('jitter must lie in [0, 0.5]')
    dx, dy, dw, dh = rng.uniform(-jitter, jitter, size=4)
    box = Box(
        gt.cx + dx * gt.w,
        gt.cy + dy * gt.h,
        gt.w * (1.0 + dw),
        gt.h * (1.0 + dh)
    )
    if _inside(box, image_w, image_h):
        return box
    return box.clamp(image_w, image_h)


def _negative(rng, objects, image_w, image_h, tries=100):
    best, best_iou = None, None
    lo, hi = 0.15, 0.6
    for attempt in range(tries):
        if attempt == tries // 2:
            lo, hi = 0.08, 0.3
        w = rng.uniform(lo, hi) * image_w
        h = rng.uniform(lo, hi) * image_h
        x = rng.uniform(0, image_w - w)
        y = rng.uniform(0, image_h - h)
        box = Box.from_corners(x, y, x + w, y + h)
        overlap = max(box.iou(gt) for gt, _ in objects)
        if overlap < NEGATIVE_IOU:
            return box
        if best_iou is None or overlap < best_iou:
            best, best_iou = box, overlap
    logger.warning(
        'No negative under IoU %.2f after %d tries; using one at IoU %.3f',
        NEGATIVE_IOU, tries, best_iou
    )
    return best


def gen_proposals(scene, n_per_image, jitter, neg_fraction, seed):
    """
    `n_per_image` ``(Box, BoxTarget)`` pairs for `scene`:
    ``round(n_per_image * neg_fraction)`` negatives, the rest jittered
    copies of the ground-truth boxes taken in turn.
    """
    rng = np.random.default_rng(seed)
    image_w, image_h = scene.size
    n_neg = int(round(n_per_image * neg_fraction))
    n_pos = n_per_image - n_neg

    boxes = []
    for j in range(n_pos):
        gt, _ = scene.objects[j % len(scene.objects)]
        boxes.append(_jitter(rng, gt, jitter, image_w, image_h))
    for _ in range(n_neg):
        boxes.append(_negative(rng, scene.objects, image_w, image_h))
    return [(box, label_proposal(box, scene.objects)) for box in boxes]


def stack_targets(proposals):
    """
    ``(boxes, labels [N], offsets [N, 4])`` with zero offsets for
    background.
    """
    boxes = [box for box, _ in proposals]
    labels = np.array([t.label for _, t in proposals], dtype=np.int64)
    offsets = np.zeros((len(proposals), 4))
    for i, (_, target) in enumerate(proposals):
        if target.offsets is not None:
            offsets[i] = target.offsets
    return boxes, labels, offsets
