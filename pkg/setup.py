import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -O3 without -ffast-math: kernels must preserve IEEE semantics so that
# NaN detection and the 64-bit adjoint identity tests stay exact.
extensions = [
    Extension(
        "crfgan.tensor.kernels._convkern",
        ["src/crfgan/tensor/kernels/_convkern.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-funroll-loops"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
