"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``MPNR_LAB_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MPNR_LAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

occupancy_table = _impl.occupancy_table
weighted_occupancy = _impl.weighted_occupancy

__all__ = ["BACKEND", "occupancy_table", "weighted_occupancy"]
