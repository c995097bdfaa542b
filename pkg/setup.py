import os

from setuptools import Extension, setup

# The skipgram training inner loop dominates runtime at corpus scale, so it is
# compiled with Cython when possible. The package still works without the
# extension: tweetsift.embedding.trainer falls back to a numpy implementation
# with identical semantics. Set TWEETSIFT_PURE_PYTHON=1 to skip compilation.
extensions = []
if os.environ.get("TWEETSIFT_PURE_PYTHON") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        extensions = cythonize(
            [
                Extension(
                    "tweetsift.embedding._sgns_kernel",
                    ["src/tweetsift/embedding/_sgns_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        extensions = []

setup(ext_modules=extensions)
