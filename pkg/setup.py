import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the numpy fallback is used
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("GENDERSIGNAL_NO_EXT"):
    ext = Extension(
        "gendersignal._kernels._ckernels",
        [os.path.join("src", "gendersignal", "_kernels", "_ckernels.pyx")],
        include_dirs=[np.get_include()],
        # no fused multiply-add: distances must round exactly like the numpy oracle
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize(
        [ext],
        language_level=3,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
