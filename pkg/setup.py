"""Build script: compiles the Cython kernel extension when possible.

If Cython or a C compiler is unavailable the install falls back to the
pure-numpy kernels in survact._kernels_py (selected at import time).
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/survact/_ckernels.pyx",
        compiler_directives={"language_level": 3},
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        ext.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
except Exception as exc:  # noqa: BLE001 - any build-chain failure means pure install
    print(f"survact: skipping compiled kernels ({exc}); pure-python fallback will be used")

setup(ext_modules=ext_modules)
