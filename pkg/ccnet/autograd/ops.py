# -*- coding: utf8 -*-
"""
Differentiable primitives.

Each primitive computes its value with numpy and hands `Tensor.from_op`
a closure returning one gradient per input. Shape rules are noted per
primitive; inputs that break them raise `ConfigurationError`.
"""
__all__ = (
    'as_tensor',
    'add',
    'sub',
    'mul',
    'elementwise_scale',
    'scale',
    'linear',
    'conv2d',
    'relu',
    'softplus',
    'max_pool',
    'global_avg_pool',
    'softmax',
    'ratio_normalize',
    'log',
    'sum',
    'reshape',
    'concat',
    'gather',
    'smooth_l1',
    'roi_max_pool',
    'PRIMITIVES',
    'primitive_forward'
)
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ccnet.autograd.tensor import Tensor
from ccnet.errors import ConfigurationError, NumericError


def as_tensor(x):
    """
    Return `x` unchanged if it already is a Tensor, else a constant Tensor.
    """
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad, shape):
    """
    Sum `grad` back down to `shape` after numpy broadcasting.
    """
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ConfigurationError(
            '{0}: shapes {1} and {2} do not broadcast'.format(
                op, a.shape, b.shape
            )
        )


def add(a, b):
    """
    Elementwise ``a + b`` with numpy broadcasting.
    """
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('add', a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op('add', a.data + b.data, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('sub', a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op('sub', a.data - b.data, (a, b), backward)


def mul(a, b):
    """
    Elementwise product ``a ⊙ b`` with numpy broadcasting. Scaling a batch
    of feature rows [N, C] by a per-channel vector [C] is the common case.
    """
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('mul', a, b)

    def backward(g):
        return (
            _unbroadcast(g * b.data, a.shape),
            _unbroadcast(g * a.data, b.shape)
        )

    return Tensor.from_op('mul', a.data * b.data, (a, b), backward)


elementwise_scale = mul


def scale(x, factor):
    """
    Multiply by a constant (non-differentiable) scalar or array.
    """
    x = as_tensor(x)
    factor = np.asarray(factor, dtype=np.float64)

    def backward(g):
        return (_unbroadcast(g * factor, x.shape),)

    return Tensor.from_op('scale', x.data * factor, (x,), backward)


def linear(x, weight, bias=None):
    """
    Affine map ``x @ weight.T + bias``.

    x: [in] or [N, in]; weight: [out, in]; bias: [out].
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if weight.ndim != 2 or x.ndim not in (1, 2) \
            or x.shape[-1] != weight.shape[1]:
        raise ConfigurationError(
            'linear: input {0} does not fit weight {1}'.format(
                x.shape, weight.shape
            )
        )
    out = x.data.dot(weight.data.T)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ConfigurationError(
                'linear: bias {0} does not fit weight {1}'.format(
                    bias.shape, weight.shape
                )
            )
        out = out + bias.data
        parents.append(bias)

    def backward(g):
        gx = g.dot(weight.data)
        if x.ndim == 1:
            gw = np.outer(g, x.data)
        else:
            gw = g.T.dot(x.data)
        grads = [gx, gw]
        if bias is not None:
            grads.append(g if g.ndim == 1 else g.sum(axis=0))
        return grads

    return Tensor.from_op('linear', out, parents, backward)


def conv2d(x, weight, bias=None, stride=1, padding=None):
    """
    2-D cross-correlation.

    x: [C, H, W] or [N, C, H, W]; weight: [O, C, kh, kw]; bias: [O].
    `padding` defaults to ``kh // 2`` (same-size output at stride 1).
    """
    x, weight = as_tensor(x), as_tensor(weight)
    batched = x.ndim == 4
    if x.ndim not in (3, 4) or weight.ndim != 4 \
            or x.shape[-3] != weight.shape[1]:
        raise ConfigurationError(
            'conv2d: input {0} does not fit weight {1}'.format(
                x.shape, weight.shape
            )
        )
    O, C, kh, kw = weight.shape
    pad = kh // 2 if padding is None else padding

    xd = x.data if batched else x.data[None]
    xp = np.pad(xd, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    if xp.shape[2] < kh or xp.shape[3] < kw:
        raise ConfigurationError(
            'conv2d: kernel {0}x{1} larger than padded input {2}'.format(
                kh, kw, xp.shape[2:]
            )
        )
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]
    Ho, Wo = windows.shape[2], windows.shape[3]

    # [N, Ho, Wo, O] -> [N, O, Ho, Wo]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3]))
    out = out.transpose(0, 3, 1, 2)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (O,):
            raise ConfigurationError(
                'conv2d: bias {0} does not fit {1} output channels'.format(
                    bias.shape, O
                )
            )
        out = out + bias.data[None, :, None, None]
        parents.append(bias)

    def backward(g):
        gb = g if batched else g[None]
        gw = np.tensordot(gb, windows, axes=([0, 2, 3], [0, 2, 3]))

        # [N, Ho, Wo, C, kh, kw], scattered back one kernel tap at a time.
        cols = np.tensordot(gb, weight.data, axes=([1], [0]))
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i:i + stride * Ho:stride, j:j + stride * Wo:stride] \
                    += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        gx = gxp[:, :, pad:pad + xd.shape[2], pad:pad + xd.shape[3]]
        if not batched:
            gx = gx[0]
        grads = [gx, gw]
        if bias is not None:
            grads.append(gb.sum(axis=(0, 2, 3)))
        return grads

    return Tensor.from_op(
        'conv2d', out if batched else out[0], parents, backward
    )


def relu(x):
    """
    max(x, 0); the subgradient at 0 is 0.
    """
    x = as_tensor(x)
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return Tensor.from_op('relu', np.where(mask, x.data, 0.0), (x,), backward)


def softplus(x):
    """
    log(1 + exp(x)), computed as logaddexp(0, x).
    """
    x = as_tensor(x)
    gate = 0.5 * (1.0 + np.tanh(0.5 * x.data))

    def backward(g):
        return (g * gate,)

    return Tensor.from_op(
        'softplus', np.logaddexp(0.0, x.data), (x,), backward
    )


def max_pool(x, size=2):
    """
    Non-overlapping size x size max pooling over the last two axes.
    Trailing rows/columns that don't fill a window are dropped. Gradients
    go to the first maximal cell of each window.
    """
    x = as_tensor(x)
    if x.ndim < 2 or x.shape[-1] < size or x.shape[-2] < size:
        raise ConfigurationError(
            'max_pool: input {0} smaller than window {1}'.format(
                x.shape, size
            )
        )
    lead = x.shape[:-2]
    H, W = x.shape[-2:]
    Ho, Wo = H // size, W // size
    cropped = x.data[..., :Ho * size, :Wo * size]
    cells = cropped.reshape(lead + (Ho, size, Wo, size))
    k = len(lead)
    cells = np.moveaxis(cells, k + 2, k + 1).reshape(
        lead + (Ho, Wo, size * size)
    )
    arg = cells.argmax(axis=-1)
    out = np.take_along_axis(cells, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        gcells = np.zeros(lead + (Ho, Wo, size * size))
        np.put_along_axis(gcells, arg[..., None], g[..., None], axis=-1)
        gcells = gcells.reshape(lead + (Ho, Wo, size, size))
        gcells = np.moveaxis(gcells, k + 2, k + 1).reshape(
            lead + (Ho * size, Wo * size)
        )
        gx = np.zeros(x.shape)
        gx[..., :Ho * size, :Wo * size] = gcells
        return (gx,)

    return Tensor.from_op('max_pool', out, (x,), backward)


def global_avg_pool(x):
    """
    Spatial mean: [..., C, H, W] -> [..., C].
    """
    x = as_tensor(x)
    if x.ndim < 3:
        raise ConfigurationError(
            'global_avg_pool: need [..., C, H, W], got {0}'.format(x.shape)
        )
    H, W = x.shape[-2:]

    def backward(g):
        return (np.broadcast_to(g[..., None, None] / (H * W), x.shape).copy(),)

    return Tensor.from_op(
        'global_avg_pool', x.data.mean(axis=(-2, -1)), (x,), backward
    )


def softmax(x, axis=-1):
    """
    Exponential softmax along `axis`, max-subtracted for stability.
    """
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op('softmax', y, (x,), backward)


def ratio_normalize(x, axis=-1):
    """
    Plain ratio normalisation ``x_k / sum_j x_j``. Only defined while every
    sum is strictly positive.
    """
    x = as_tensor(x)
    s = x.data.sum(axis=axis, keepdims=True)
    if np.any(s <= 0):
        raise NumericError(
            'ratio_normalize: score sum must be positive, got {0}'.format(
                float(s.min())
            )
        )
    y = x.data / s

    def backward(g):
        return ((g - (g * y).sum(axis=axis, keepdims=True)) / s,)

    return Tensor.from_op('ratio_normalize', y, (x,), backward)


def log(x, floor=None):
    """
    Natural log. With `floor`, inputs are clamped to at least `floor`
    first and the clamped entries get zero gradient.
    """
    x = as_tensor(x)
    if floor is None:
        clamped, live = x.data, np.ones(x.shape, dtype=bool)
    else:
        clamped = np.maximum(x.data, floor)
        live = x.data >= floor

    def backward(g):
        return (np.where(live, g / clamped, 0.0),)

    return Tensor.from_op('log', np.log(clamped), (x,), backward)


def sum(x, axis=None):
    """
    Sum over `axis`, or over everything into a scalar.
    """
    x = as_tensor(x)

    def backward(g):
        if axis is None:
            return (np.full(x.shape, float(g)),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)

    return Tensor.from_op('sum', np.sum(x.data, axis=axis), (x,), backward)


def reshape(x, shape):
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ConfigurationError(
            'reshape: cannot view {0} as {1}'.format(x.shape, shape)
        )

    def backward(g):
        return (g.reshape(x.shape),)

    return Tensor.from_op('reshape', out, (x,), backward)


def concat(tensors, axis=-1):
    """
    Join tensors along `axis`; all other extents must agree.
    """
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ConfigurationError(
            'concat: incompatible shapes {0}'.format(
                [t.shape for t in tensors]
            )
        )
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return np.split(g, bounds, axis=axis)

    return Tensor.from_op('concat', out, tensors, backward)


def gather(x, index):
    """
    Pick one entry per row: ``x[n, index[n]]`` for x [N, M], or ``x[index]``
    for a vector and an integer index.
    """
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)
    if x.ndim == 1 and index.ndim == 0:
        rows = ()
    elif x.ndim == 2 and index.shape == (x.shape[0],):
        rows = (np.arange(x.shape[0]),)
    else:
        raise ConfigurationError(
            'gather: index {0} does not fit input {1}'.format(
                index.shape, x.shape
            )
        )
    if np.any(index < 0) or np.any(index >= x.shape[-1]):
        raise ConfigurationError('gather: index out of range')
    where = rows + (index,)

    def backward(g):
        gx = np.zeros(x.shape)
        np.add.at(gx, where, g)
        return (gx,)

    return Tensor.from_op('gather', x.data[where], (x,), backward)


def smooth_l1(d):
    """
    Elementwise 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
    """
    d = as_tensor(d)
    a = np.abs(d.data)
    inner = a < 1.0
    out = np.where(inner, 0.5 * d.data ** 2, a - 0.5)

    def backward(g):
        return (g * np.where(inner, d.data, np.sign(d.data)),)

    return Tensor.from_op('smooth_l1', out, (d,), backward)


def roi_max_pool(featmap, windows):
    """
    Max-pool RoI windows out of a [C, Hf, Wf] feature map.

    `windows` holds one ``(row_bins, col_bins)`` pair per RoI; each bin list
    gives the half-open ``(start, end)`` cell range of every output row or
    column. All RoIs must share the output size. Returns [N, C, s, s].
    Gradients route to the cell that won each bin.
    """
    featmap = as_tensor(featmap)
    if featmap.ndim != 3:
        raise ConfigurationError(
            'roi_max_pool: need a [C, H, W] map, got {0}'.format(
                featmap.shape
            )
        )
    if not windows:
        raise ConfigurationError('roi_max_pool: no windows given')
    C, Hf, Wf = featmap.shape

    values, cells = [], []
    for rows, cols in windows:
        v, c = _pool_window(featmap.data, rows, cols)
        values.append(v)
        cells.append(c)
    sizes = set(v.shape for v in values)
    if len(sizes) != 1:
        raise ConfigurationError(
            'roi_max_pool: windows disagree on output size {0}'.format(sizes)
        )
    out = np.stack(values)
    flat = np.stack(cells)

    def backward(g):
        gx = np.zeros((C, Hf * Wf))
        channel = np.broadcast_to(
            np.arange(C)[None, :, None, None], flat.shape
        )
        np.add.at(gx, (channel, flat), g)
        return (gx.reshape(C, Hf, Wf),)

    return Tensor.from_op('roi_pool', out, (featmap,), backward)


def _pool_window(x, rows, cols):
    """
    Separable max over bins: rows first, then columns. Returns the pooled
    values and the flat map index of each bin's winning cell.
    """
    C, Hf, Wf = x.shape
    for start, end in list(rows) + list(cols):
        if not 0 <= start < end:
            raise ConfigurationError(
                'roi_max_pool: empty bin ({0}, {1})'.format(start, end)
            )
    if max(e for _, e in rows) > Hf or max(e for _, e in cols) > Wf:
        raise ConfigurationError('roi_max_pool: bin outside feature map')

    c0 = min(s for s, _ in cols)
    c1 = max(e for _, e in cols)
    region = x[:, :, c0:c1]

    row_max = np.empty((C, len(rows), c1 - c0))
    row_arg = np.empty((C, len(rows), c1 - c0), dtype=np.int64)
    for i, (y0, y1) in enumerate(rows):
        band = region[:, y0:y1, :]
        a = band.argmax(axis=1)
        row_arg[:, i, :] = y0 + a
        row_max[:, i, :] = np.take_along_axis(band, a[:, None, :], axis=1)[:, 0]

    out = np.empty((C, len(rows), len(cols)))
    flat = np.empty((C, len(rows), len(cols)), dtype=np.int64)
    for j, (x0, x1) in enumerate(cols):
        band = row_max[:, :, x0 - c0:x1 - c0]
        a = band.argmax(axis=2)
        out[:, :, j] = np.take_along_axis(band, a[..., None], axis=2)[..., 0]
        r = np.take_along_axis(
            row_arg[:, :, x0 - c0:x1 - c0], a[..., None], axis=2
        )[..., 0]
        flat[:, :, j] = r * Wf + x0 + a
    return out, flat


#: Name -> primitive, for callers that dispatch by op name.
PRIMITIVES = {
    'conv2d': conv2d,
    'linear': linear,
    'relu': relu,
    'softplus': softplus,
    'add': add,
    'elementwise_scale': elementwise_scale,
    'max_pool': max_pool,
    'global_avg_pool': global_avg_pool,
    'softmax': softmax,
    'log': log,
    'sum': sum,
    'sub': sub,
    'scale': scale,
    'reshape': reshape,
    'concat': concat,
    'gather': gather,
    'smooth_l1': smooth_l1,
    'ratio_normalize': ratio_normalize,
    'roi_pool': roi_max_pool
}


def primitive_forward(op, *inputs, **kwargs):
    """
    Run primitive `op` by name.
    """
    try:
        fn = PRIMITIVES[op]
    except KeyError:
        raise ConfigurationError(
            'unknown primitive {0!r}; known: {1}'.format(
                op, ', '.join(sorted(PRIMITIVES))
            )
        )
    return fn(*inputs, **kwargs)
