# -*- coding: utf8 -*-
from ccnet.models.box import *
from ccnet.models.backbone import *
from ccnet.models.stage import *
from ccnet.models.chain import *
from ccnet.models.objective import *
from ccnet.models.net import *
