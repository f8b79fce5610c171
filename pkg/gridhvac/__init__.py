#!/usr/bin/env python
# -*- coding: utf-8 -*-

from .version import __version__
