"""Build script: compiles the quasi-triangular Sylvester kernel when Cython
is available.  Set MORH2W_NO_EXT=1 to force a pure-Python install; the
package falls back to the numpy kernel at import time either way."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MORH2W_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "morh2w._kernels._qtri_cy",
                    sources=["src/morh2w/_kernels/_qtri_cy.pyx"],
                )
            ],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": "3",
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
