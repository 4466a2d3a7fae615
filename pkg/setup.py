import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        [Extension("maxperiodic.kernels._kernels",
                   ["src/maxperiodic/kernels/_kernels.pyx"],
                   include_dirs=[numpy.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API",
                                   "NPY_1_7_API_VERSION")],
                   extra_compile_args=["-O3"])],
        language_level=3),
)
