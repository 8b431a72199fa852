# -*- coding: utf-8 -*-
#
# smoothcem documentation build configuration file.
#
import os
import sys

sys.path.insert(0, os.path.abspath(".."))

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.coverage",
    "sphinx.ext.mathjax",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = u"smoothcem"
copyright = u"2024, smoothcem developers"

from smoothcem import __version__  # noqa: E402

version = ".".join(__version__.split(".")[:2])
release = __version__

exclude_patterns = ["_build"]
pygments_style = "sphinx"
html_theme = "default"
htmlhelp_basename = "smoothcemdoc"

man_pages = [
    ("index", "smoothcem", u"smoothcem Documentation", [u"smoothcem developers"], 1)
]

intersphinx_mapping = {"python": ("https://docs.python.org/3", None)}
