from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "quantprecode._sesd_cy",
                sources=["src/quantprecode/_sesd_cy.pyx"],
                include_dirs=[np.get_include()],
                # fp-contract off keeps the compiled kernel bit-identical to
                # the pure-Python reference (no FMA fusing).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Package stays usable without the compiled kernel; the pure-Python
    # fallback is selected at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
