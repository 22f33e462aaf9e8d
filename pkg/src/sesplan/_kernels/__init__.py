"""Hot kernels: compiled Cython core with a pure-Python fallback.

The compiled module is used when it imports; set ``SESPLAN_PURE_PYTHON=1``
to force the fallback. ``BACKEND`` names the active implementation.
"""

import os

from . import _pycore

if os.environ.get("SESPLAN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pycore
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pycore

BACKEND = "python" if _impl is _pycore else "cython"

exec_from = _impl.exec_from
eses_advance = _impl.eses_advance
longest_paths = _impl.longest_paths
reaches = _impl.reaches
has_cycle = _impl.has_cycle
brute_force = _impl.brute_force


def backends():
    """Every importable implementation, keyed by name (for tests and benchmarks)."""
    found = {"python": _pycore}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        found["cython"] = _core
    return found
