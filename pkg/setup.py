"""Build the optional compiled kernels.

The package works without them: ``ssdmotion.kernels`` falls back to the
numpy implementation when the extension is missing.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("SSDMOTION_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "ssdmotion._ckernels",
                    ["src/ssdmotion/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # fp-contract off keeps the AdamW kernel bit-identical
                    # to the numpy fallback; no-math-errno lets sqrt vectorize.
                    extra_compile_args=["-O3", "-ffp-contract=off", "-fno-math-errno"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
