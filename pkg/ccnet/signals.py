# -*- coding: utf8 -*-
"""
In-process training events.
"""
__all__ = ('step_completed', 'checkpoint_saved', 'training_aborted')
from blinker import Namespace

_signals = Namespace()

#: Sent after every optimizer step with ``report`` (a LossReport).
step_completed = _signals.signal('step-completed')
#: Sent with ``path`` and ``step`` after a checkpoint is written.
checkpoint_saved = _signals.signal('checkpoint-saved')
#: Sent with ``dump_path`` when a non-finite loss stops training.
training_aborted = _signals.signal('training-aborted')
