# -*- coding: utf8 -*-
"""
Run configuration: a YAML file checked against `SCHEMA`.

Every section and key is documented in `SCHEMA`. Unknown keys, wrong types
and a missing ``stages`` list are errors; every error names the offending
line and key path, e.g. ``line 12: data.classes: expected an integer``.
"""
__all__ = ('RunConfig', 'Field', 'Section', 'SCHEMA', 'load', 'loads')
import math
import os
from collections import OrderedDict

import yaml

from ccnet import config
from ccnet.errors import ConfigurationError

#: Most stages a cascade may have.
MAX_STAGES = 8


class Field(object):
    """
    One scalar or list setting: its kind, default and allowed range.
    """
    def __init__(self, kind, default, doc='', item=None, nullable=False,
                 choices=None, minimum=None, maximum=None):
        self.kind = kind
        self.default = default
        self.doc = doc
        self.item = item
        self.nullable = nullable
        self.choices = choices
        self.minimum = minimum
        self.maximum = maximum

    def coerce(self, value, path, line):
        if value is None:
            if self.nullable:
                return None
            raise ConfigurationError('may not be empty', line, path)

        if self.kind == 'list':
            if not isinstance(value, list):
                raise ConfigurationError(
                    'expected a list of {0} values'.format(self.item),
                    line, path
                )
            item = Field(self.item, None, minimum=self.minimum,
                         maximum=self.maximum)
            return [
                item.coerce(v, '{0}[{1}]'.format(path, i), line)
                for i, v in enumerate(value)
            ]
        if self.kind == 'rates':
            # A single rate or one rate per stage.
            if isinstance(value, list):
                return Field('list', None, item='float', minimum=0.0,
                             maximum=1.0).coerce(value, path, line)
            return Field('float', None, minimum=0.0,
                         maximum=1.0).coerce(value, path, line)

        value = _SCALARS[self.kind](value, path, line)
        if self.choices is not None and value not in self.choices:
            raise ConfigurationError(
                '{0!r} is not one of: {1}'.format(
                    value, ', '.join(str(c) for c in self.choices)
                ),
                line, path
            )
        if self.minimum is not None and value < self.minimum:
            raise ConfigurationError(
                'must be at least {0}'.format(self.minimum), line, path
            )
        if self.maximum is not None and value > self.maximum:
            raise ConfigurationError(
                'must be at most {0}'.format(self.maximum), line, path
            )
        return value


def _as_int(value, path, line):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError('expected an integer', line, path)
    return value


def _as_float(value, path, line):
    number = None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        number = float(value)
    elif isinstance(value, str):
        # YAML 1.1 reads ``1e-12`` as a string.
        try:
            number = float(value)
        except ValueError:
            pass
    if number is None:
        raise ConfigurationError('expected a number', line, path)
    if not math.isfinite(number):
        raise ConfigurationError('expected a finite number', line, path)
    return number


def _as_bool(value, path, line):
    if not isinstance(value, bool):
        raise ConfigurationError('expected true or false', line, path)
    return value


def _as_str(value, path, line):
    if not isinstance(value, str):
        raise ConfigurationError('expected a string', line, path)
    return value


_SCALARS = {
    'int': _as_int,
    'float': _as_float,
    'bool': _as_bool,
    'str': _as_str
}

#: Keys of every entry in the required ``stages`` list.
STAGE_SCHEMA = OrderedDict([
    ('pooled_size', Field(
        'int', None, 'Side length of the roi-pooled grid.', minimum=1
    )),
    ('context', Field(
        'float', None, 'Context padding c; the RoI grows to (1 + c) times '
        'its size.', minimum=0.0
    )),
])

SCHEMA = OrderedDict([
    ('mode', Field(
        'str', 'chained_cascade', 'Ablation mode to train and evaluate.'
    )),
    ('seeds', Field('list', [0], 'Seeds to run.', item='int')),
    ('output', Field('str', 'out', 'Root of every run directory.')),
    ('model', OrderedDict([
        ('backbone_channels', Field(
            'list', list(config.DEFAULT_BACKBONE_CHANNELS),
            'Widths of the four backbone convolutions.', item='int',
            minimum=1
        )),
        ('head_channels', Field(
            'int', config.DEFAULT_HEAD_CHANNELS,
            'Length C1 of every stage feature.', minimum=1
        )),
        ('background_index', Field(
            'int', config.BACKGROUND_INDEX, 'Fixed at 0.', choices=(0,)
        )),
        ('init_seed_offset', Field(
            'int', 0, 'Added to the run seed for weight initialisation.'
        )),
    ])),
    ('chain', OrderedDict([
        ('normalize', Field(
            'str', 'softmax', 'Score normalisation.',
            choices=('softmax', 'ratio')
        )),
        ('learn_scales', Field(
            'bool', True, 'Learn the chaining scales a and b (else fixed '
            'at 1).'
        )),
    ])),
    ('loss', OrderedDict([
        ('lambdas', Field(
            'list', None, 'Per-stage weights; empty for 0.02/T then 1.',
            item='float', nullable=True, minimum=0.0
        )),
        ('train_thresholds', Field(
            'list', None, 'T - 1 training rejection thresholds; empty for '
            '{0}.'.format(config.DEFAULT_TRAIN_THRESHOLD),
            item='float', nullable=True, minimum=0.0, maximum=1.0
        )),
        ('log_floor', Field(
            'float', config.LOG_FLOOR, 'Clamp inside the log.',
            minimum=0.0
        )),
    ])),
    ('data', OrderedDict([
        ('classes', Field('int', 8, 'Foreground classes K.', minimum=2)),
        ('train_images', Field('int', 500, '', minimum=0)),
        ('test_images', Field('int', 200, '', minimum=0)),
        ('calib_images', Field('int', 100, '', minimum=0)),
        ('image_size', Field(
            'int', 64, 'Side length; a multiple of the backbone stride.',
            minimum=config.BACKBONE_STRIDE * 2
        )),
        ('proposals_per_image', Field('int', 32, '', minimum=1)),
        ('jitter', Field(
            'float', 0.1, 'Positive jitter as a fraction of box size.',
            minimum=0.0, maximum=0.5
        )),
        ('neg_fraction', Field(
            'float', 0.75, 'Share of proposals drawn as negatives.',
            minimum=0.0, maximum=1.0
        )),
        ('cache', Field(
            'str', None, 'Dataset cache directory.', nullable=True
        )),
    ])),
    ('optimizer', OrderedDict([
        ('lr', Field('float', config.DEFAULT_LR, '', minimum=0.0)),
        ('weight_decay', Field(
            'float', config.DEFAULT_WEIGHT_DECAY, '', minimum=0.0
        )),
        ('steps', Field('int', 1200, '', minimum=0)),
        ('decay_at', Field(
            'list', list(config.DEFAULT_LR_DECAY_AT),
            'Fractions of training after which the lr decays.',
            item='float', minimum=0.0, maximum=1.0
        )),
        ('decay_factor', Field(
            'float', config.DEFAULT_LR_DECAY_FACTOR, '', minimum=0.0
        )),
        ('images_per_step', Field('int', 1, '', minimum=1)),
    ])),
    ('train', OrderedDict([
        ('checkpoint_every', Field(
            'int', 500, 'Steps between checkpoints; 0 saves only at the '
            'end.', minimum=0
        )),
    ])),
    ('eval', OrderedDict([
        ('nms_iou', Field(
            'float', config.NMS_IOU, '', minimum=0.0, maximum=1.0
        )),
        ('match_iou', Field(
            'float', config.MATCH_IOU, '', minimum=0.0, maximum=1.0
        )),
        ('score_floor', Field(
            'float', config.SCORE_FLOOR, '', minimum=0.0, maximum=1.0
        )),
        ('workers', Field('int', 1, 'Evaluation processes.', minimum=1)),
        ('write_traces', Field(
            'bool', False, 'Write one cascade trace per RoI.'
        )),
    ])),
    ('calibrate', OrderedDict([
        ('target_reject', Field(
            'rates', 0.3, 'Negative rejection rate per stage: one rate for '
            'stages 1..T-1, or a list of T rates.'
        )),
    ])),
])


class Section(OrderedDict):
    """
    A config section with attribute access to its keys.
    """
    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name)


def _line_index(node, path=(), index=None):
    """
    Map every key path in a composed YAML tree to its 1-based line.
    """
    index = {} if index is None else index
    if node is None:
        return index
    index[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            child = path + (key.value,)
            _line_index(value, child, index)
            index[child] = key.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            _line_index(value, path + (i,), index)
    return index


def _path_name(path):
    name = ''
    for part in path:
        if isinstance(part, int):
            name += '[{0}]'.format(part)
        else:
            name += ('.' if name else '') + part
    return name


class RunConfig(object):
    """
    A validated run configuration. Sections are `Section` objects, so
    ``cfg.data.classes`` and ``cfg.optimizer.lr`` read naturally.
    """
    def __init__(self, values):
        self._values = values
        for key, value in values.items():
            setattr(self, key, value)

    @classmethod
    def from_dict(cls, raw, lines=None):
        lines = lines or {}

        def line_of(path):
            while path not in lines and path:
                path = path[:-1]
            return lines.get(path)

        def fail(message, path):
            raise ConfigurationError(
                message, line_of(path), _path_name(path) or None
            )

        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            fail('the run config must be a mapping', ())

        known = set(SCHEMA) | {'stages'}
        for key in raw:
            if key not in known:
                fail('unknown key', (key,))

        values = OrderedDict()
        for key, spec in SCHEMA.items():
            if isinstance(spec, Field):
                path = (key,)
                values[key] = spec.coerce(
                    raw.get(key, spec.default), _path_name(path),
                    line_of(path)
                )
                continue

            section = raw.get(key) or {}
            if not isinstance(section, dict):
                fail('expected a mapping', (key,))
            for name in section:
                if name not in spec:
                    fail('unknown key', (key, name))
            values[key] = Section(
                (name, field.coerce(
                    section.get(name, field.default),
                    _path_name((key, name)),
                    line_of((key, name))
                ))
                for name, field in spec.items()
            )

        values['stages'] = cls._stages(raw, fail, line_of)
        cfg = cls(values)
        cfg._check(fail)
        return cfg

    @staticmethod
    def _stages(raw, fail, line_of):
        if 'stages' not in raw:
            fail('missing required key', ('stages',))
        stages = raw['stages']
        if not isinstance(stages, list) or not stages:
            fail('expected a non-empty list of stages', ('stages',))
        if len(stages) > MAX_STAGES:
            fail(
                'at most {0} stages are supported'.format(MAX_STAGES),
                ('stages',)
            )

        out = []
        for i, stage in enumerate(stages):
            path = ('stages', i)
            if not isinstance(stage, dict):
                fail('expected a mapping', path)
            for name in stage:
                if name not in STAGE_SCHEMA:
                    fail('unknown key', path + (name,))
            entry = Section()
            for name, field in STAGE_SCHEMA.items():
                if name not in stage:
                    fail('missing required key', path + (name,))
                entry[name] = field.coerce(
                    stage[name], _path_name(path + (name,)),
                    line_of(path + (name,))
                )
            out.append(entry)
        return out

    def _check(self, fail):
        T = self.T
        if len(self.model.backbone_channels) != 4:
            fail('expected 4 widths', ('model', 'backbone_channels'))
        if self.loss.lambdas is not None and len(self.loss.lambdas) != T:
            fail('expected {0} weights'.format(T), ('loss', 'lambdas'))
        if self.loss.train_thresholds is not None \
                and len(self.loss.train_thresholds) != T - 1:
            fail(
                'expected {0} thresholds'.format(T - 1),
                ('loss', 'train_thresholds')
            )
        if self.data.image_size % config.BACKBONE_STRIDE:
            fail(
                'must be a multiple of {0}'.format(config.BACKBONE_STRIDE),
                ('data', 'image_size')
            )
        rates = self.calibrate.target_reject
        if isinstance(rates, list) and len(rates) != T:
            fail(
                'expected one rate or {0} rates'.format(T),
                ('calibrate', 'target_reject')
            )
        if not self.seeds:
            fail('need at least one seed', ('seeds',))

    @property
    def T(self):
        return len(self.stages)

    def stage_geometry(self):
        return [(s.pooled_size, s.context) for s in self.stages]

    def run_dir(self, mode=None, seed=None):
        """
        ``<output>/<mode>/seed-<seed>``.
        """
        return os.path.join(
            self.output,
            mode or self.mode,
            'seed-{0}'.format(self.seeds[0] if seed is None else seed)
        )

    def replace(self, **changes):
        """
        A copy with top-level keys replaced, validated again.
        """
        values = self.to_dict()
        values.update(changes)
        return RunConfig.from_dict(values)

    def to_dict(self):
        out = OrderedDict()
        for key in ['mode', 'seeds', 'output', 'stages'] + [
                k for k, v in SCHEMA.items() if not isinstance(v, Field)]:
            value = self._values[key]
            if key == 'stages':
                value = [dict(s) for s in value]
            elif isinstance(value, Section):
                value = dict(value)
            elif isinstance(value, list):
                value = list(value)
            out[key] = value
        return out

    def dump(self):
        """
        Serialise back to YAML; `loads` of the result gives an equal config.
        """
        return yaml.safe_dump(
            dict(self.to_dict()), sort_keys=False, default_flow_style=None
        )

    def __eq__(self, other):
        return isinstance(other, RunConfig) \
            and self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return '<RunConfig mode={0} T={1}>'.format(self.mode, self.T)


def loads(text):
    """
    Parse and validate YAML text into a `RunConfig`.
    """
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        raise ConfigurationError(
            'not valid YAML ({0})'.format(e.problem), line
        )
    return RunConfig.from_dict(raw, _line_index(node))


def load(path):
    try:
        with open(path) as fin:
            text = fin.read()
    except IOError as e:
        raise ConfigurationError(
            'cannot read config {0}: {1}'.format(path, e.strerror)
        )
    return loads(text)
