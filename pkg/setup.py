import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "pumpsentinel._transform_cy",
                ["src/pumpsentinel/_transform_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no -ffast-math: the compiled core must match the pure
                # numpy fallback bit for bit
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pure-python transform lane still works
    warnings.warn(f"building without the compiled transform core: {exc}")

setup(ext_modules=ext_modules)
