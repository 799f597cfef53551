"""Build the optional Cython Jacobi kernel.

The package works without it: ``specgap._kernels`` falls back to a
numpy implementation when the extension cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SPECGAP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "specgap._jacobi",
                    ["src/specgap/_jacobi.pyx"],
                    include_dirs=[np.get_include()],
                    # inline struct arithmetic instead of C99 complex, whose
                    # multiply is a libgcc call (__muldc3) per operation
                    define_macros=[("CYTHON_CCOMPLEX", "0")],
                    # keep rounding identical across builds: no FMA contraction
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
