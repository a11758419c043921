"""Build script for the optional compiled kernel core.

The Cython extension is optional: if Cython or a C compiler is missing the
package installs without it and the pure-Python kernels are used instead.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("QEMKIT_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize

        extensions = [
            Extension(
                "qemkit._kernels",
                ["src/qemkit/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
