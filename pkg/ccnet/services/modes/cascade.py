# -*- coding: utf8 -*-
__all__ = ('ConventionalCascade',)
from ccnet.services.modes.mode import Mode


class ConventionalCascade(Mode):
    SERVICE_NAME = 'Conventional cascade'
    SERVICE_ID = 'conventional_cascade'

    classifier_chaining = False

    @classmethod
    def description(cls):
        return (
            'Chained features, but every stage decides on its own scores.'
        )
