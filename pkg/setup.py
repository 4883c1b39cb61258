import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("BFO_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("bfo._explore_kernel", ["src/bfo/_explore_kernel.pyx"])],
            compiler_directives={"language_level": 3},
            quiet=True,
        )

setup(ext_modules=ext_modules)
