"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the
scipy-backed fallback takes over.  Set EXTHEAT_FORCE_PYTHON_KERNELS=1 to
force the fallback (used by the benchmark and parity tests).
"""

import os

from . import _kernels_py

if os.environ.get("EXTHEAT_FORCE_PYTHON_KERNELS") == "1":
    _impl = _kernels_py
    _NAME = "python"
else:
    try:
        from . import _kernels as _impl

        _NAME = "compiled"
    except ImportError:
        _impl = _kernels_py
        _NAME = "python"

solve_tridiag = _impl.solve_tridiag
march_be = _impl.march_be


def backend_name():
    return _NAME
