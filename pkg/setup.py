from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off: the compiled kernels must round every operation like the
# pure-Python fallback does, or the two backends stop being bit-identical.
ext = Extension(
    "mpshrink._ckernels",
    ["src/mpshrink/_ckernels.pyx"],
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

setup(ext_modules=cythonize([ext], language_level=3) if cythonize else [])
