# -*- coding: utf8 -*-
__all__ = ('JSONLinesLog', 'StepLog', 'TraceLog', 'read_lines')
import json

from ccnet.signals import step_completed


def read_lines(path, start=0, stop=None):
    """
    Returns the JSON records of the log at `path` from `start` to `stop`.
    """
    with open(path) as fin:
        records = [json.loads(line) for line in fin if line.strip()]
    return records[start:stop]


class JSONLinesLog(object):
    """
    Appends one JSON object per line to `path`.
    """
    def __init__(self, path, mode='w'):
        self.path = path
        self._fout = open(path, mode)
        self.count = 0

    def write(self, record):
        self._fout.write(json.dumps(record, sort_keys=True))
        self._fout.write('\n')
        self._fout.flush()
        self.count += 1

    def close(self):
        if not self._fout.closed:
            self._fout.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class StepLog(JSONLinesLog):
    """
    The training log: one LossReport per optimizer step, fed by the
    `step_completed` signal while the log is open.
    """
    def __init__(self, path, sender=None):
        super(StepLog, self).__init__(path)
        self._sender = sender
        if sender is None:
            step_completed.connect(self._on_step, weak=False)
        else:
            step_completed.connect(self._on_step, sender=sender, weak=False)

    def _on_step(self, sender, report=None, **kwargs):
        self.write(report.to_dict())

    def close(self):
        step_completed.disconnect(self._on_step)
        super(StepLog, self).close()


class TraceLog(JSONLinesLog):
    """
    One cascade trace per RoI: the stage reached, the max foreground
    probability at every evaluated stage and the verdict.
    """
    def log_trace(self, trace, **extra):
        self.write(trace.to_record(**extra))
