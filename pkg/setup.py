"""Build script: compiles the optional Cython kernels for the sharding hot loop.

The package works without the extension (a numpy fallback is selected at
import time), so a failed extension build is downgraded to a warning.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/drdst/sharding/_kernels.pyx"],
        language_level=3,
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"warning: skipping Cython kernels ({exc}); pure-python fallback will be used",
          file=sys.stderr)
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
