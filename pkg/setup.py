"""Build script for the optional compiled Monte Carlo kernel.

The package is fully functional without the extension; qansim._mc falls
back to a NumPy implementation when qansim._mckernel is missing.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "qansim._mckernel",
                ["src/qansim/_mckernel.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
