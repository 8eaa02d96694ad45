# -*- coding: utf8 -*-
from ccnet.errors import ConfigurationError


class Service(type):
    """
    Metaclass for pluggable families (the ablation modes). The first class
    built with it becomes the family root and owns ``services``; every
    subclass with a ``SERVICE_ID`` is registered there under that id.
    """
    def __init__(cls, name, bases, attrs):
        super(Service, cls).__init__(name, bases, attrs)

        if not hasattr(cls, 'services'):
            cls.services = {}
            return

        service_id = attrs.get('SERVICE_ID')
        if service_id is None:
            return
        if service_id in cls.services:
            raise ConfigurationError(
                '{0} reuses the id {1!r} of {2}'.format(
                    name, service_id, cls.services[service_id].__name__
                )
            )
        cls.services[service_id] = cls
