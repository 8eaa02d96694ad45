# -*- coding: utf8 -*-
__all__ = ('ChainedCascade', 'ChainedCascadeNoFeatureChain')
from ccnet.services.modes.mode import Mode


class ChainedCascade(Mode):
    SERVICE_NAME = 'Chained cascade'
    SERVICE_ID = 'chained_cascade'

    @classmethod
    def description(cls):
        return 'Chained features and chained classifier scores.'


class ChainedCascadeNoFeatureChain(Mode):
    SERVICE_NAME = 'Chained cascade without feature chaining'
    SERVICE_ID = 'chained_cascade_no_feature_chain'

    feature_chaining = False

    @classmethod
    def description(cls):
        return 'Chained classifier scores over independent stage features.'
