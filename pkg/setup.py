import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the kernel if possible; the package falls back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            self.warn(f"compiled kernel not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self.warn(f"compiled kernel not built ({exc}); using pure-Python fallback")


ext_modules = []
if os.environ.get("SRIC_NO_EXTENSION") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "sric._kernels",
                    ["src/sric/_kernels.pyx"],
                    libraries=["m"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": 3, "embedsignature": True},
        )

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
