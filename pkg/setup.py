"""Builds the optional compiled search kernel.

If Cython or a C compiler is unavailable the package still installs and
falls back to the pure-Python engine.
"""
import sys

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extra = ["-O3", "-ffp-contract=off"] if sys.platform != "win32" else ["/O2", "/fp:precise"]
    ext_modules = cythonize(
        [
            Extension(
                "activesearch._knn_core",
                ["src/activesearch/_knn_core.pyx"],
                extra_compile_args=extra,
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
