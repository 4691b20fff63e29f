"""Build script: compiles the optional Cython kernel core.

The extension is a pure accelerator. When Cython or a C compiler is missing
the build silently skips it and the package falls back to the numpy kernels
at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "dxlink.kernels._core",
                ["src/dxlink/kernels/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
