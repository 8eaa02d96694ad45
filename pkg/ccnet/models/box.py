# -*- coding: utf8 -*-
__all__ = ('Box', 'iou', 'bbox_encode', 'bbox_decode')
import math
from collections import namedtuple

import numpy as np

from ccnet.errors import ContractError


class Box(namedtuple('Box', ['cx', 'cy', 'w', 'h'])):
    """
    An axis-aligned rectangle in image pixels, stored as center and size.
    """
    __slots__ = ()

    @classmethod
    def new(cls, cx, cy, w, h):
        """
        Build a box, insisting on a positive width and height.
        """
        if not (w > 0 and h > 0):
            raise ContractError(
                'box needs positive width and height, got {0}x{1}'.format(w, h)
            )
        return cls(float(cx), float(cy), float(w), float(h))

    @classmethod
    def from_corners(cls, x1, y1, x2, y2):
        return cls.new((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)

    @property
    def corners(self):
        """
        ``(x1, y1, x2, y2)``.
        """
        return (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0
        )

    @property
    def area(self):
        return self.w * self.h

    def clamp(self, image_w, image_h):
        """
        Move each edge that lies outside the image back onto the image
        border. Edges move inward only, so the center may shift.
        """
        x1, y1, x2, y2 = self.corners
        x1, x2 = max(x1, 0.0), min(x2, float(image_w))
        y1, y2 = max(y1, 0.0), min(y2, float(image_h))
        return Box.from_corners(x1, y1, x2, y2)

    def contains(self, other, eps=1e-9):
        ax1, ay1, ax2, ay2 = self.corners
        bx1, by1, bx2, by2 = other.corners
        return (
            ax1 <= bx1 + eps and ay1 <= by1 + eps and
            ax2 >= bx2 - eps and ay2 >= by2 - eps
        )

    def iou(self, other):
        return iou(self, other)

    def to_list(self):
        return [self.cx, self.cy, self.w, self.h]


def iou(a, b):
    """
    Intersection over union of two boxes.
    """
    ax1, ay1, ax2, ay2 = a.corners
    bx1, by1, bx2, by2 = b.corners
    iw = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    ih = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def bbox_encode(proposal, gt):
    """
    RCNN regression targets of `gt` relative to `proposal`:

        tx = (gx - px) / pw      ty = (gy - py) / ph
        tw = log(gw / pw)        th = log(gh / ph)
    """
    for b in (proposal, gt):
        if not (b.w > 0 and b.h > 0):
            raise ContractError('bbox_encode needs positive box sizes')
    return np.array([
        (gt.cx - proposal.cx) / proposal.w,
        (gt.cy - proposal.cy) / proposal.h,
        math.log(gt.w / proposal.w),
        math.log(gt.h / proposal.h)
    ])


def bbox_decode(proposal, offsets):
    """
    Exact inverse of `bbox_encode`.
    """
    tx, ty, tw, th = [float(v) for v in offsets]
    return Box(
        proposal.cx + tx * proposal.w,
        proposal.cy + ty * proposal.h,
        proposal.w * math.exp(tw),
        proposal.h * math.exp(th)
    )
