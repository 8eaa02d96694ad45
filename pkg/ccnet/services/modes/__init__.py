# -*- coding: utf8 -*-
from ccnet.services.modes.mode import *
from ccnet.services.modes.baseline import *
from ccnet.services.modes.cascade import *
from ccnet.services.modes.chained import *
from ccnet.services.modes.concat import *
