"""Build the optional Cython kernels.

The package imports a pure-Python fallback when the extension is absent, so a
failed compile leaves a working (slower) install.
"""
from setuptools import setup

ext_modules = []
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
                "nlks._kernels",
                ["src/nlks/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: the compensated sum relies on IEEE rounding
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
