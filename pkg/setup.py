import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HEISLAB_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("heislab._kernels", ["src/heislab/_kernels.pyx"],
                       include_dirs=[np.get_include()], define_macros=[("_GNU_SOURCE", None)], extra_compile_args=["-O3", "-fcx-limited-range", "-ffast-math"])],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
