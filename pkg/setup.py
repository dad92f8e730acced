"""Build script. The Cython extension is optional: when Cython and a C
compiler are available the fast integration kernels are compiled, otherwise
the package installs pure-Python and selects the fallback at import time.

Force-skip the extension with FLOCSIM_NO_EXT=1.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FLOCSIM_NO_EXT") and os.path.exists("src/flocsim/_fastrk.pyx"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("flocsim._fastrk", ["src/flocsim/_fastrk.pyx"])],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
