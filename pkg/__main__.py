# -*- coding: utf-8 -*-
import sys

import main

sys.exit(main.main())
