"""Build script for the compiled metric kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so the build is best effort: if no compiler or Cython is
available the wheel is built pure.

Local development build:
    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "colabel._kernels._fast",
                ["src/colabel/_kernels/_fast.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
