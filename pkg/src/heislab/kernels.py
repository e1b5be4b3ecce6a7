"""Import-time selection between the compiled kernel and the numpy fallback.

Set ``HEISLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
trotter_segments = _kernels_py.trotter_segments

if os.environ.get("HEISLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        trotter_segments = _compiled.trotter_segments
        BACKEND = "cython"
