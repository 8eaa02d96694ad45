# -*- coding: utf8 -*-
"""
Exceptions raised across ccnet. The CLI turns any `CCNetError` into a
one-line message and a nonzero exit code.
"""
__all__ = (
    'CCNetError',
    'ConfigurationError',
    'NumericError',
    'ContractError',
    'TrainingAborted'
)


class CCNetError(Exception):
    """
    Base type for every error ccnet raises on purpose.
    """


class ConfigurationError(CCNetError):
    """
    Something was set up wrong: a bad run config, or tensors whose shapes
    do not fit the operation they were handed to.
    """
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        prefix = []
        if line is not None:
            prefix.append('line {0}'.format(line))
        if path:
            prefix.append(path)
        if prefix:
            message = '{0}: {1}'.format(': '.join(prefix), message)
        super(ConfigurationError, self).__init__(message)


class NumericError(CCNetError):
    """
    A NaN or an infinity showed up where finite values are required.
    """


class ContractError(CCNetError):
    """
    A caller broke an operation's precondition.
    """


class TrainingAborted(CCNetError):
    """
    Training stopped on a non-finite loss. `dump_path` points at the
    diagnostic dump of the offending batch.
    """
    def __init__(self, message, dump_path=None):
        self.dump_path = dump_path
        super(TrainingAborted, self).__init__(message)
