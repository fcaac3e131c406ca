"""Build script: compiles the optional Cython rollout kernel.

The package is fully functional without the extension (a pure-Python
kernel is selected at import time), so any build failure here should be
treated as "no extension", not as a broken install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("etcdos._rollout", ["src/etcdos/_rollout.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
