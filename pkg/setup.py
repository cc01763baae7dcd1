"""Build script for the optional compiled exploration kernel.

The package works without the extension (a pure-Python kernel with the
same contract is selected at import time); building it just makes
exhaustive exploration roughly an order of magnitude faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mutexlab._core",
                ["src/mutexlab/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython: install pure-Python only.
    ext_modules = []

setup(ext_modules=ext_modules)
