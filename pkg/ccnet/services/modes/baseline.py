# -*- coding: utf8 -*-
__all__ = ('SingleStageBaseline',)
from ccnet.services.modes.mode import Mode


class SingleStageBaseline(Mode):
    SERVICE_NAME = 'Single stage baseline'
    SERVICE_ID = 'single_stage_baseline'

    single_stage = True

    @classmethod
    def description(cls):
        return 'One stage, one classifier: a plain RoI detection head.'
