"""Build script for the optional compiled kernels.

The package works without the extension (a pure-numpy backend is selected
at import time); building it just makes conv3d/upsampling considerably
faster. `pip install -e . --no-build-isolation` compiles it in place.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "resrom.tensorcore._kernels",
        sources=["src/resrom/tensorcore/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    ext.optional = True  # a failed compile must not break the install
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
