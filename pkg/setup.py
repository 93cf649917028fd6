"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python backend is selected at
import time), so a missing compiler or Cython only costs speed, not features.
Floating point flags are pinned so the compiled kernels produce bit-identical
results to the fallback: no FMA contraction, no fast-math reassociation.
"""

import os

from setuptools import Extension, setup

EXT_SOURCES = [os.path.join("src", "factorforge", "_kernels", "_ext.pyx")]

COMPILE_ARGS = ["-O3", "-ffp-contract=off", "-fno-fast-math"]


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "factorforge._kernels._ext",
        EXT_SOURCES,
        include_dirs=[numpy.get_include()],
        extra_compile_args=COMPILE_ARGS,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
