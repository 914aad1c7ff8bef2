"""Selects the quadrature kernel at import time.

The compiled ``_kernels`` extension is used when it imports cleanly; set
``SRIC_PURE_PYTHON=1`` to force the pure-Python mirror.
"""

import os

from . import _kernels_py

if os.environ.get("SRIC_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

COMPILED = _impl is not _kernels_py
BACKEND = "cython" if COMPILED else "python"

expected_order_stat = _impl.expected_order_stat
log_density = _impl.log_density
upper_limit = _impl.upper_limit
