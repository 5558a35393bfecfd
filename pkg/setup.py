import os

from setuptools import Extension, setup

# The compiled kernels are optional: setting AMBQC_PURE_PYTHON=1 at build time
# skips them, and ambqc._backend falls back to the numpy implementation.
ext_modules = []
if not os.environ.get("AMBQC_PURE_PYTHON"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("ambqc._kernels", ["src/ambqc/_kernels.pyx"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
