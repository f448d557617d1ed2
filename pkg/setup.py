"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import); the extension just makes the per-round experiment loops fast.
"""
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/polyreg/_kernels/_fastloops.pyx"],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - cython missing or broken toolchain
    print(f"polyreg: skipping Cython extension build ({exc}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
