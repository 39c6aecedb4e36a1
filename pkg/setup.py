"""Build hook for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-Python
backend is selected at import time); the Cython build is attempted only
when Cython is available and can be skipped with FORCECOMPASS_NO_EXT=1.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping compiled kernels ({exc}); using pure-Python backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); using pure-Python backend")


ext_modules = []
if os.environ.get("FORCECOMPASS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        # No -ffast-math: the compiled kernels must be bit-identical to the
        # pure backend (IEEE-754 semantics, same operation order).
        ext_modules = cythonize(
            ["src/forcecompass/_kernels/_core.pyx"],
            language_level=3,
        )
    except Exception as exc:
        print(f"warning: not building compiled kernels ({exc})")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
