"""Build script: compiles the optional Cython stepping kernels.

If Cython or a C compiler is unavailable the package still installs; the
pure numpy kernels in cavpass._kernels_py are used instead (see
cavpass.kernels for the import-time selection).
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "cavpass._kernels",
                ["src/cavpass/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    import warnings

    warnings.warn(f"building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
