"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
twin.  Set ``OVERCOMMIT_PURE_PYTHON=1`` to force the fallback.
"""

import os
import warnings

from overcommit import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("OVERCOMMIT_PURE_PYTHON", "") in ("", "0"):
    try:
        from overcommit import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError as exc:  # pragma: no cover - depends on the build
        warnings.warn(f"compiled kernels unavailable ({exc}); using the pure-Python fallback")
        _impl = _kernels_py

pack_online = _impl.pack_online
subset_feasibility = _impl.subset_feasibility
min_partition = _impl.min_partition
machine_violations = _impl.machine_violations

FIRST_FIT = _kernels_py.FIRST_FIT
BEST_FIT = _kernels_py.BEST_FIT
NEXT_FIT = _kernels_py.NEXT_FIT


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _kernels_py
    from overcommit import _kernels
    return _kernels
