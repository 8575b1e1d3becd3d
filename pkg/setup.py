import os

import numpy as np
from setuptools import Extension, setup

# Set HOLOPATCH_NO_EXT=1 to install the pure-Python fallback only.
ext_modules = []
if not os.environ.get("HOLOPATCH_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "holopatch._kernels",
                ["src/holopatch/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no FMA contraction: the fallback must reproduce results bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
