# Sphinx configuration for kpmperf.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os
import sys
sys.path.insert(0, os.path.abspath('../..'))


# -- Project information -----------------------------------------------------

project = 'pyKPMPerf'
copyright = '2026, pyKPMPerf developers'
author = 'pyKPMPerf developers'

release = '0.1.0'


# -- General configuration ---------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.coverage',
        'sphinx.ext.napoleon', 'sphinx.ext.intersphinx',
        'sphinx.ext.viewcode',
]

napoleon_include_init_with_doc = True


intersphinx_mapping = {'python': ('http://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable/', None),
                       'scipy': ('https://docs.scipy.org/doc/scipy/', None),
                       'pandas': ('https://pandas.pydata.org/docs/', None)}

templates_path = ['_templates']

exclude_patterns = []


# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'

html_static_path = ['_static']
