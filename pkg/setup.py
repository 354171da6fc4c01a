import numpy as np
from setuptools import Extension, setup

# The compiled kernels are an optional speedup: if Cython or a C compiler is
# missing, the install falls back to the NumPy implementations in
# potkit.kernels.numpy_backend.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "potkit.kernels._cy",
                ["src/potkit/kernels/_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
