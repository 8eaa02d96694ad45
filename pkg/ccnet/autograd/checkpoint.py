# -*- coding: utf8 -*-
"""
Flat binary parameter checkpoints.

Layout (all integers unsigned 32-bit little-endian):

    version, parameter count
    per parameter:
        name length, name bytes (utf-8),
        rank, extents...,
        raw little-endian float64 values in row-major order
"""
__all__ = ('save', 'load', 'restore')
import struct
import logging
from collections import OrderedDict

import numpy as np

from ccnet import config
from ccnet.errors import ConfigurationError

logger = logging.getLogger(__name__)

_U32 = struct.Struct('<I')


def save(path, params):
    """
    Write `params` (an iterable of Parameters) to `path`.
    """
    params = list(params)
    names = [p.name for p in params]
    if len(set(names)) != len(names):
        raise ConfigurationError('duplicate parameter names in checkpoint')

    chunks = [struct.pack('<II', config.CHECKPOINT_VERSION, len(params))]
    for p in params:
        name = p.name.encode('utf-8')
        chunks.append(_U32.pack(len(name)))
        chunks.append(name)
        chunks.append(_U32.pack(p.data.ndim))
        chunks.append(struct.pack('<{0}I'.format(p.data.ndim), *p.data.shape))
        chunks.append(np.ascontiguousarray(p.data, dtype='<f8').tobytes())

    with open(path, 'wb') as fout:
        fout.write(b''.join(chunks))


def load(path):
    """
    Read a checkpoint into an ordered mapping of name -> float64 array.
    """
    with open(path, 'rb') as fin:
        blob = fin.read()

    try:
        version, count = struct.unpack_from('<II', blob, 0)
        if version != config.CHECKPOINT_VERSION:
            raise ConfigurationError(
                'checkpoint {0} has format version {1}, expected {2}'.format(
                    path, version, config.CHECKPOINT_VERSION
                )
            )
        offset = 8
        arrays = OrderedDict()
        for _ in range(count):
            (n,) = _U32.unpack_from(blob, offset)
            offset += 4
            name = blob[offset:offset + n].decode('utf-8')
            offset += n
            (rank,) = _U32.unpack_from(blob, offset)
            offset += 4
            shape = struct.unpack_from('<{0}I'.format(rank), blob, offset)
            offset += 4 * rank
            size = int(np.prod(shape, dtype=np.int64))
            data = np.frombuffer(blob, dtype='<f8', count=size, offset=offset)
            offset += 8 * size
            arrays[name] = data.astype(np.float64).reshape(shape)
    except (struct.error, ValueError, UnicodeDecodeError):
        raise ConfigurationError('checkpoint {0} is truncated'.format(path))

    if offset != len(blob):
        raise ConfigurationError(
            'checkpoint {0} has {1} trailing bytes'.format(
                path, len(blob) - offset
            )
        )
    return arrays


def restore(params, path):
    """
    Copy values from the checkpoint at `path` into `params` by name.
    """
    arrays = load(path)
    params = list(params)
    expected = set(p.name for p in params)
    missing = expected - set(arrays)
    extra = set(arrays) - expected
    if missing or extra:
        raise ConfigurationError(
            'checkpoint {0} does not fit the model (missing: {1}; '
            'unexpected: {2})'.format(
                path, ', '.join(sorted(missing)) or '-',
                ', '.join(sorted(extra)) or '-'
            )
        )

    for p in params:
        if arrays[p.name].shape != p.shape:
            raise ConfigurationError(
                'checkpoint {0}: {1} has shape {2}, model wants {3}'.format(
                    path, p.name, arrays[p.name].shape, p.shape
                )
            )
        p.data = arrays[p.name].copy()

    logger.debug('Restored %d parameters from %s', len(params), path)
