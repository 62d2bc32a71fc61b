"""Select the compiled kernel module, falling back to the pure-Python twin.

Set ``KGREC_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

kernels = _pykernels
name = "python"

if not os.environ.get("KGREC_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _kernels
        name = "cython"
