"""Build hook for the optional compiled kernel extension.

The package is pure Python except for ``beliefmdp._ckernels``, a small
Cython module with the trajectory-simulation inner loops.  If Cython or a
C compiler is unavailable the build falls back to the pure-Python kernels
in ``beliefmdp._pykernels`` (selected at import time), so the extension is
marked optional.
"""

import os

from setuptools import Extension, setup

try:
    if not os.path.exists("src/beliefmdp/_ckernels.pyx"):
        raise ImportError
    from Cython.Build import cythonize
    import numpy as np

    extensions = cythonize(
        [
            Extension(
                "beliefmdp._ckernels",
                ["src/beliefmdp/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
