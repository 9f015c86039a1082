"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``JACOBISPEC_PURE=1`` to force the fallback.
"""

import os

from . import _pykernels as python_kernels

compiled_kernels = None
if not os.environ.get("JACOBISPEC_PURE"):
    try:
        from . import _kernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if compiled_kernels is not None else "python"
