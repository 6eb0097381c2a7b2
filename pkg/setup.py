import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("servsvm._simcore", ["src/servsvm/_simcore.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    warnings.warn(
        "Cython is not available; installing with the pure-Python "
        "simulator kernel only"
    )

setup(ext_modules=ext_modules)
