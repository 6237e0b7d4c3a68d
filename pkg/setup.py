from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython kernels if possible; the package falls back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            self.warn(f"compiled kernels not built: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self.warn(f"compiled kernels not built: {exc}")


try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("termforge._ckernels", ["src/termforge/_ckernels.pyx"], extra_compile_args=["-O3"])],
        language_level=3,
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
