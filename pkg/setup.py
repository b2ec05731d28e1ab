"""Build script: compiles the Monte Carlo kernels to a C extension when a
toolchain is available, otherwise installs pure Python (the package selects
the numpy fallback at import time)."""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/wsqkd/pulsesim/_kernels.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover - toolchain-dependent
    print(f"wsqkd: building without compiled kernels ({exc})", file=sys.stderr)
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
