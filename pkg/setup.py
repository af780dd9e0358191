import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps the C arithmetic IEEE-identical to the pure-Python
# fallback (no FMA contraction), so both backends produce bit-equal traces.
extensions = [
    Extension(
        "rulenet._kernels",
        ["src/rulenet/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions, compiler_directives={"language_level": "3"}
    )
    if cythonize is not None
    else [],
)
