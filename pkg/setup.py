"""Build script: compiles the optional traversal kernels.

The package works without the extension (a pure-Python mirror is selected
at import time), so the extension is marked optional and a failed compile
only downgrades performance.
"""

import numpy
from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "xtree._kernels._ctraverse",
        sources=["src/xtree/_kernels/_ctraverse.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext.optional = True
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
