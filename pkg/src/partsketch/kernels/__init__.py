"""Hot-kernel dispatch.

The rasterizer, thinning, and point-mesh distance kernels dominate
build time.  By default the numba-jitted versions are used; set
``PARTSKETCH_NUMBA=0`` to force the pure-numpy fallback (identical
results, slower).  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

_flag = os.environ.get("PARTSKETCH_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

if _want_numba:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:  # numba missing or broken: fall back silently
        from . import _numpy as _impl

        BACKEND = "numpy"
else:
    from . import _numpy as _impl

    BACKEND = "numpy"

zbuffer_triangles = _impl.zbuffer_triangles
draw_segments = _impl.draw_segments
thin_pass = _impl.thin_pass
remove_blocks = _impl.remove_blocks
min_point_tri_dist = _impl.min_point_tri_dist
closest_point_tris = _impl.closest_point_tris

__all__ = [
    "BACKEND",
    "zbuffer_triangles",
    "draw_segments",
    "thin_pass",
    "remove_blocks",
    "min_point_tri_dist",
    "closest_point_tris",
]
