"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; set ``CANTORPROJ_KERNELS=python``
to force the fallback. Both expose the same functions with the same contracts.
"""
from __future__ import annotations

import os

from . import _fallback

_impl = _fallback
BACKEND = "python"
if os.environ.get("CANTORPROJ_KERNELS", "").lower() != "python":
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        pass

line_length_sums = _impl.line_length_sums
line_length_sums_grid = _impl.line_length_sums_grid
strip_hit_counts = _impl.strip_hit_counts
strip_hit_counts_grid = _impl.strip_hit_counts_grid
strip_clip_areas = _impl.strip_clip_areas
line_lengths = _fallback.line_lengths


def backends() -> dict:
    """All importable backends by name, for cross-checks and benchmarks."""
    out = {"python": _fallback}
    try:
        from . import _core

        out["compiled"] = _core
    except ImportError:
        pass
    return out
