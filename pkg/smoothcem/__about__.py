# -*- coding: utf-8 -*-
#

__author__ = u"smoothcem developers"
__author_email__ = "smoothcem@users.noreply.github.com"
__copyright__ = u"Copyright (c) 2024, {} <{}>".format(__author__, __author_email__)
__license__ = "License :: OSI Approved :: MIT License"
__version__ = "0.1.0"
__status__ = "Development Status :: 3 - Alpha"
