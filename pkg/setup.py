"""Build script: compiles the optional simplex pivot kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "blisstamp.milp._pivot_kernel",
                ["src/blisstamp/milp/_pivot_kernel.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps the compiled kernel bit-compatible
                # with the NumPy fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    sys.stderr.write(f"warning: building without compiled kernel ({exc})\n")

setup(ext_modules=ext_modules)
