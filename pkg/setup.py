"""Build script for the compiled chain-stepping core.

The extension is optional at runtime: the package falls back to the pure
numpy engine if the compiled module cannot be imported.  ``-ffp-contract=off``
keeps the C arithmetic bit-identical to numpy's elementwise operations, which
the engine equivalence tests rely on.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "hrlopt._engine_c",
    sources=["src/hrlopt/_engine_c.pyx"],
    include_dirs=[numpy.get_include()],
    # -ffp-contract=off: no fused multiply-adds (numpy rounds every op).
    # -fno-builtin-sin/-cos: keep gcc from fusing the separate sin/cos calls
    # into glibc sincos, which rounds differently in the last ulp.
    extra_compile_args=["-O3", "-ffp-contract=off",
                        "-fno-builtin-sin", "-fno-builtin-cos"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level=3))
