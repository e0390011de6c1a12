"""Builds the optional Cython kernels; the package works without them."""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "anthrograsp.kernels._ckernels",
                ["src/anthrograsp/kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    print("Cython/numpy unavailable; installing pure-Python kernels only", file=sys.stderr)

setup(ext_modules=ext_modules)
