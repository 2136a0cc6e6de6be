import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FRACSOLVE_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        # the pure-Python kernels are picked up at import time
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "fracsolve._kernels",
                    ["src/fracsolve/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
