"""Build script for the optional compiled correlation kernel.

The package works without the extension (a numpy fallback is selected at
import time); `optional=True` keeps installation alive on toolchains that
cannot compile it. Build in place for development with:

    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

from Cython.Build import cythonize

ext = Extension(
    "perfweave._ccf_ext",
    sources=["src/perfweave/_ccf_ext.pyx"],
    extra_compile_args=["-O3", "-fopenmp"],
    extra_link_args=["-fopenmp"],
    optional=True,
)

setup(ext_modules=cythonize([ext], language_level="3"))
