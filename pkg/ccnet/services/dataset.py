# -*- coding: utf8 -*-
"""
Synthetic shapes benchmark: every class is a distinct (shape, colour) pair
drawn with Pillow on a noisy background.
"""
__all__ = (
    'SynthScene',
    'synth_dataset',
    'render_scene',
    'save_dataset',
    'load_dataset',
    'dataset_split',
    'cache_path',
    'SPLITS'
)
import os
import json
import logging

import numpy as np
from PIL import Image, ImageDraw

from ccnet.errors import ConfigurationError
from ccnet.models.box import Box

logger = logging.getLogger(__name__)

#: Polygon side counts; 0 is a filled ellipse.
SHAPES = (0, 4, 3, 5, 6)
COLORS = (
    (220, 40, 40),
    (40, 200, 60),
    (50, 80, 230),
    (235, 210, 40)
)
#: Split name -> offset mixed into the dataset seed.
SPLITS = {'train': 0, 'test': 1, 'calib': 2}
INDEX_NAME = 'index.json'
INDEX_VERSION = 1


def class_style(label):
    """
    ``(sides, rgb)`` of foreground class `label` (1-based). Classes 1..20
    are pairwise distinct.
    """
    i = label - 1
    return SHAPES[i % len(SHAPES)], COLORS[i % len(COLORS)]


MAX_CLASSES = len(SHAPES) * len(COLORS)


class SynthScene(object):
    """
    One synthetic image and its ground truth.

    :param image: float64 array [3, H, W] in roughly [0, 1].
    :param objects: list of ``(Box, label)`` with labels in 1..K.
    :param seed: renders this exact scene again through `render_scene`.
    """
    def __init__(self, image, objects, seed):
        self.image = image
        self.objects = objects
        self.seed = seed

    @property
    def size(self):
        return self.image.shape[-1], self.image.shape[-2]

    @property
    def boxes(self):
        return [b for b, _ in self.objects]

    @property
    def labels(self):
        return [k for _, k in self.objects]

    def __repr__(self):
        return '<SynthScene seed={0} objects={1}>'.format(
            self.seed, len(self.objects)
        )


def _label_stream(rng, K):
    """
    Endless class labels drawn as concatenated random permutations of
    1..K, so every class gets its share.
    """
    while True:
        for k in rng.permutation(K) + 1:
            yield int(k)


def _place(rng, image_size, placed, tries=20):
    lo, hi = int(image_size * 0.25), int(image_size * 0.5)
    box = None
    for _ in range(tries):
        s = int(rng.integers(lo, hi + 1))
        x = int(rng.integers(0, image_size - s + 1))
        y = int(rng.integers(0, image_size - s + 1))
        box = Box.from_corners(x, y, x + s, y + s)
        if all(box.iou(other) < 0.3 for other in placed):
            break
    return box


def render_scene(seed, labels, image_size):
    """
    Draw one scene holding objects of the given `labels`.
    """
    rng = np.random.default_rng(seed)
    shade = int(rng.integers(0, 40))
    im = Image.new('RGB', (image_size, image_size), (shade,) * 3)
    draw = ImageDraw.Draw(im)

    objects = []
    for label in labels:
        box = _place(rng, image_size, [b for b, _ in objects])
        sides, color = class_style(label)
        x1, y1, x2, y2 = box.corners
        if sides == 0:
            draw.ellipse([(x1, y1), (x2 - 1, y2 - 1)], fill=color)
        elif sides == 4:
            draw.rectangle([(x1, y1), (x2 - 1, y2 - 1)], fill=color)
        else:
            draw.regular_polygon(
                (box.cx, box.cy, box.w / 2.0), sides,
                rotation=int(rng.integers(0, 360)), fill=color
            )
        objects.append((box, label))

    image = np.asarray(im, dtype=np.float64).transpose(2, 0, 1) / 255.0
    image = image + rng.normal(0.0, 0.03, size=image.shape)
    return SynthScene(image, objects, seed)


def _scene_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def synth_dataset(seed, n_images, K, image_size):
    """
    `n_images` scenes with 1 to 3 objects each. Equal arguments give
    identical pixels.
    """
    if K < 2:
        raise ConfigurationError('need at least 2 classes, got {0}'.format(K))
    if K > MAX_CLASSES:
        raise ConfigurationError(
            'at most {0} visually distinct classes'.format(MAX_CLASSES)
        )

    rng = np.random.default_rng(seed)
    labels = _label_stream(rng, K)
    scenes = []
    for index in range(n_images):
        count = int(rng.integers(1, 4))
        scenes.append(render_scene(
            _scene_seed(seed, index),
            [next(labels) for _ in range(count)],
            image_size
        ))
    return scenes


def save_dataset(path, scenes, meta=None):
    """
    Write `scenes` as one ``.npy`` tensor per image plus a JSON index.
    """
    if not os.path.isdir(path):
        os.makedirs(path)

    entries = []
    for i, scene in enumerate(scenes):
        name = 'image-{0:05d}.npy'.format(i)
        np.save(os.path.join(path, name), scene.image)
        entries.append({
            'file': name,
            'seed': scene.seed,
            'objects': [b.to_list() + [k] for b, k in scene.objects]
        })
    index = {
        'version': INDEX_VERSION,
        'meta': meta or {},
        'scenes': entries
    }
    with open(os.path.join(path, INDEX_NAME), 'w') as fout:
        json.dump(index, fout, indent=1)
    logger.info('Saved %d scenes to %s', len(scenes), path)


def load_dataset(path):
    index_path = os.path.join(path, INDEX_NAME)
    try:
        with open(index_path) as fin:
            index = json.load(fin)
    except (IOError, ValueError) as e:
        raise ConfigurationError(
            'cannot read dataset index {0}: {1}'.format(index_path, e)
        )
    if index.get('version') != INDEX_VERSION:
        raise ConfigurationError(
            'dataset {0} has index version {1}, expected {2}'.format(
                path, index.get('version'), INDEX_VERSION
            )
        )

    scenes = []
    for entry in index['scenes']:
        image = np.load(os.path.join(path, entry['file']))
        objects = [
            (Box(*obj[:4]), int(obj[4])) for obj in entry['objects']
        ]
        scenes.append(SynthScene(image, objects, entry['seed']))
    return scenes


def _split_seed(seed, split):
    try:
        return seed * len(SPLITS) + SPLITS[split]
    except KeyError:
        raise ConfigurationError('unknown split {0!r}'.format(split))


def cache_path(cfg, seed, split):
    """
    Cache directory of one split, or None when caching is off.
    """
    data = cfg.data
    if not data.cache:
        return None
    return os.path.join(
        data.cache,
        '{0}-k{1}-s{2}-n{3}-seed{4}'.format(
            split, data.classes, data.image_size,
            getattr(data, '{0}_images'.format(split)),
            _split_seed(seed, split)
        )
    )


def dataset_split(cfg, seed, split, refresh=False):
    """
    The `split` ('train', 'test' or 'calib') of run `seed`, read from and
    written to ``cfg.data.cache`` when a cache directory is set.
    """
    data = cfg.data
    split_seed = _split_seed(seed, split)
    count = getattr(data, '{0}_images'.format(split))
    path = cache_path(cfg, seed, split)

    if path and not refresh \
            and os.path.exists(os.path.join(path, INDEX_NAME)):
        logger.debug('Loading cached %s split from %s', split, path)
        return load_dataset(path)

    scenes = synth_dataset(split_seed, count, data.classes, data.image_size)
    if path:
        save_dataset(path, scenes, {
            'split': split,
            'seed': split_seed,
            'classes': data.classes,
            'image_size': data.image_size,
            'images': count
        })
    return scenes
