"""Build script: compiles the optional fast kernel when Cython is available.

The package is fully functional without the extension (the pure-Python
kernels are selected at import time), so any build failure here degrades
to a warning rather than aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "conehedge.kernels._fast",
                ["src/conehedge/kernels/_fast.pyx"],
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # pragma: no cover
    print("conehedge: Cython unavailable, building without the compiled kernel",
          file=sys.stderr)

setup(ext_modules=ext_modules)
