"""Builds the optional Cython telemetry kernels.

If Cython or a compiler is unavailable the package still installs and
``latticetact.kernels`` falls back to pure Python.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("latticetact._ckernels", ["src/latticetact/_ckernels.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
