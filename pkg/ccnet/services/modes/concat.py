# -*- coding: utf8 -*-
__all__ = ('MultiRegionConcat',)
from ccnet.services.modes.mode import Mode


class MultiRegionConcat(Mode):
    """
    Every stage's pooled region feeds one classifier through a single
    concatenated feature. No cascade and no rejection.
    """
    SERVICE_NAME = 'Multi-region concatenation'
    SERVICE_ID = 'multi_region_concat'

    feature_chaining = False
    classifier_chaining = False
    concat = True

    @classmethod
    def description(cls):
        return 'All stage features concatenated into one classifier.'
