"""Builds the optional compiled split kernel.

Without Cython or a C compiler the package installs pure-Python and falls
back to the numpy kernel at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy as np
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "flakevocab.models._split_ext",
                ["src/flakevocab/models/_split_ext.pyx"],
                include_dirs=[np.get_include()],
                # identical rounding to the numpy kernel requires no FMA contraction
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
