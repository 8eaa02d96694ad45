# -*- coding: utf8 -*-
__all__ = ('Mode', 'get_mode', 'mode_names', 'MODE_ORDER')
from ccnet.errors import ConfigurationError
from ccnet.models.net import CCNet
from ccnet.models.objective import LossConfig
from ccnet.services import Service

#: Row order of the ablation table.
MODE_ORDER = (
    'single_stage_baseline',
    'multi_region_concat',
    'conventional_cascade',
    'chained_cascade_no_feature_chain',
    'chained_cascade'
)


class Mode(object, metaclass=Service):
    """
    The base type for every ablation mode. A mode decides which stages are
    active and how their features and scores are combined.
    """
    SERVICE_NAME = None
    SERVICE_ID = None

    #: f_t = a_t * o_t + f_(t-1) when set, f_t = o_t otherwise.
    feature_chaining = True
    #: Stage t scores with the partial sum over 1..t when set, with its
    #: own scores only otherwise.
    classifier_chaining = True
    #: Concatenate all stage features into one classifier input.
    concat = False
    #: Use stage 1 only.
    single_stage = False

    @classmethod
    def description(cls):
        """
        A one-line description of this mode.
        """
        return ''

    @classmethod
    def stage_geometry(cls, cfg):
        """
        ``(pooled_size, context)`` of every stage this mode runs.
        """
        geometry = cfg.stage_geometry()
        return geometry[:1] if cls.single_stage else geometry

    @classmethod
    def stage_count(cls, cfg):
        """
        Number of classifiers in the cascade.
        """
        return 1 if cls.concat else len(cls.stage_geometry(cfg))

    @classmethod
    def build(cls, cfg, seed):
        """
        A freshly initialised network for this mode.
        """
        return CCNet.new(
            cls.stage_geometry(cfg),
            cfg.data.classes,
            seed + cfg.model.init_seed_offset,
            backbone_channels=cfg.model.backbone_channels,
            head_channels=cfg.model.head_channels,
            feature_chaining=cls.feature_chaining,
            classifier_chaining=cls.classifier_chaining,
            concat=cls.concat,
            learn_scales=cfg.chain.learn_scales,
            normalize=cfg.chain.normalize
        )

    @classmethod
    def loss_config(cls, cfg):
        """
        The training loss for this mode. Explicit stage weights and
        training thresholds only apply when the mode runs every configured
        stage; shorter cascades use the default schedule for their length.
        """
        T = cls.stage_count(cfg)
        lambdas = cfg.loss.lambdas
        thresholds = cfg.loss.train_thresholds
        if T != cfg.T:
            lambdas, thresholds = None, None
        return LossConfig(
            T, cfg.data.classes,
            lambdas=lambdas,
            train_thresholds=thresholds,
            log_floor=cfg.loss.log_floor
        )

    def __repr__(self):
        return '<Mode {0}>'.format(self.SERVICE_ID)


def mode_names():
    return [m for m in MODE_ORDER if m in Mode.services]


def get_mode(name):
    """
    The registered `Mode` called `name`.
    """
    try:
        return Mode.services[name]
    except KeyError:
        raise ConfigurationError(
            'unknown mode {0!r}; valid modes: {1}'.format(
                name, ', '.join(mode_names())
            )
        )
