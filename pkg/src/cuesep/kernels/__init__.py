"""Kernel backend selection.

The compiled Cython extension is preferred when built; the numpy reference
is the fallback.  `CUESEP_KERNELS=reference|compiled` forces a backend
(`compiled` raises if the extension is missing).
"""

import os

from . import reference

_requested = os.environ.get("CUESEP_KERNELS", "auto")

if _requested == "reference":
    _impl = reference
    BACKEND = "reference"
elif _requested in ("auto", "compiled"):
    try:
        from . import _fastkernels as _impl

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = reference
        BACKEND = "reference"
else:
    raise ValueError(f"unknown CUESEP_KERNELS value: {_requested!r}")

conv1d_fwd = _impl.conv1d_fwd
conv1d_bwd_x = _impl.conv1d_bwd_x
conv1d_bwd_w = _impl.conv1d_bwd_w
chunk_gather = _impl.chunk_gather
chunk_scatter = _impl.chunk_scatter
