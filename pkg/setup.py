import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# STIFFCHEMO_NO_OPENMP=1 builds a single-threaded core (e.g. for compilers without OpenMP).
use_openmp = os.environ.get("STIFFCHEMO_NO_OPENMP", "") != "1"
omp = ["-fopenmp"] if use_openmp else []

extensions = [
    Extension(
        "stiffchemo._core",
        ["src/stiffchemo/_core.pyx"],
        include_dirs=[np.get_include()],
        # no FMA contraction and no sin/cos fusion into sincos: keeps the compiled
        # kernels bit-compatible with the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off", "-fno-builtin-sin", "-fno-builtin-cos"]
        + omp,
        extra_link_args=omp,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
