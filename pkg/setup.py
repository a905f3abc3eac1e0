"""Build script: compiles the optional Euler-Maruyama extension kernel.

The package works without the extension (a NumPy fallback is selected at
import time); set TBDYN_NO_EXT=1 to skip compilation explicitly.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("TBDYN_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "tbdyn._em_cy",
                    ["src/tbdyn/_em_cy.pyx"],
                    # -ffp-contract=off keeps the compiled kernel bit-identical
                    # to the NumPy fallback (no FMA contraction).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level="3",
        )
    except Exception as exc:  # pragma: no cover - build-environment dependent
        print(f"tbdyn: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
