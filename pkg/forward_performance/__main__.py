# -*- coding: utf-8 -*-
"""python -m forward_performance"""

import sys

from .cli import main

sys.exit(main())
