"""Build script.

The compiled kernel extension is optional: when Cython (and a C compiler)
are available the hot loops are built as `mixlyap._kernels_c`; otherwise the
package installs pure and falls back to the numpy kernels at import time.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "mixlyap._kernels_c",
                ["src/mixlyap/_kernels_c.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
