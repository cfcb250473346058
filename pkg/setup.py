"""Build script for the optional compiled kernels.

The package works without them; ``metroloop.kernels`` falls back to the
NumPy implementation when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("METROLOOP_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "metroloop._kernels",
                    ["src/metroloop/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives=dict(
                language_level="3",
                boundscheck=False,
                wraparound=False,
                cdivision=True,
            ),
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
