"""Build hook for the optional compiled kernel core.

The package is fully functional without the extension (a numpy/pure-Python
fallback is selected at import); building it just makes the hot kernels
faster.  Build in place with:

    python setup.py build_ext --inplace

Set TOKPROBE_SKIP_EXT=1 to skip the extension entirely.
"""

import os

from setuptools import Extension, setup


def _ext_modules():
    if os.environ.get("TOKPROBE_SKIP_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    import numpy

    ext = Extension(
        "tokprobe._kernels._core",
        sources=["src/tokprobe/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_ext_modules())
