# -*- coding: utf8 -*-
from ccnet.autograd.tensor import *
from ccnet.autograd.optim import *
from ccnet.autograd.gradcheck import *
