"""Build script: compiles the optional word-kernel extension.

The package works without the extension (the pure-Python kernels are selected
at import time), so a failed compilation only costs speed.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler: fall back to pure Python
            print(f"warning: skipping speedups extension ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping {ext.name} ({exc})")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available; building pure-Python only")
        return []
    return cythonize(
        [Extension("bsw._speedups", ["src/bsw/_speedups.pyx"])],
        language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
