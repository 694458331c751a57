# -*- coding: utf-8 -*-
#
# fogopt documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.

import sys, os

# If extensions (or modules to document with autodoc) are in another directory,
# add these directories to sys.path here.
sys.path.insert(0, os.path.abspath('..'))
import fogopt

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = 'fogopt'
copyright = '2021, The fogopt developers'

version = '0.1'
release = '0.1.0'

exclude_patterns = ['_build']

pygments_style = 'sphinx'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'default'

html_static_path = ['_static']

htmlhelp_basename = 'fogoptdoc'

# -- Options for LaTeX output --------------------------------------------------

latex_elements = {
}

latex_documents = [
  ('index', 'fogopt.tex', 'fogopt Documentation',
   'The fogopt developers', 'manual'),
]

# -- Options for manual page output --------------------------------------------

man_pages = [
    ('index', 'fogopt', 'fogopt Documentation',
     ['The fogopt developers'], 1)
]

# -- Options for Texinfo output ------------------------------------------------

texinfo_documents = [
  ('index', 'fogopt', 'fogopt Documentation',
   'The fogopt developers', 'fogopt',
   'Workload allocation for cooperating fog nodes.', 'Miscellaneous'),
]
