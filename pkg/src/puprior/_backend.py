"""Select the compiled kernels when importable, else the numpy fallback.

Set ``PUPRIOR_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND_NAME = "python"
kernels = _kernels_py

if os.environ.get("PUPRIOR_BACKEND", "").lower() != "python":
    try:
        from . import _kernels_ext
    except ImportError:
        pass
    else:
        kernels = _kernels_ext
        BACKEND_NAME = "cython"


def get_kernels(name=None):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels_ext

        return _kernels_ext
    raise ValueError(f"unknown backend {name!r}")
