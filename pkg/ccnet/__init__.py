# -*- coding: utf8 -*-
import logging

from ccnet import config

__all__ = ('configure_logging',)


def configure_logging(level=None):
    """
    Send ccnet's log records to stderr at `level` (default: the level named
    by ``CC_NET_LOG``). When a Sentry DSN is configured, errors also go to
    Sentry.
    """
    level = (level or config.LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(level), int):
        level = 'INFO'

    root = logging.getLogger('ccnet')
    root.setLevel(level)
    if not any(getattr(h, '_ccnet', False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(config.LOG_FORMAT))
        handler._ccnet = True
        root.addHandler(handler)

    if config.SENTRY_DSN:
        from raven.handlers.logging import SentryHandler
        from raven.conf import setup_logging

        handler = SentryHandler(config.SENTRY_DSN)
        handler.setLevel(logging.ERROR)
        setup_logging(handler)
    return root
