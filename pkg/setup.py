"""Build the optional compiled kernels.

`pip install -e . --no-build-isolation` compiles popnet._kernels; if the
extension is missing at runtime the package falls back to the pure-NumPy
kernels automatically.
"""
import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "popnet._kernels",
    ["src/popnet/_kernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level=3))
