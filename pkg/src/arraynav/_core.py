"""Kernel backend selection.

The compiled extension is used when it imports; ``ARRAYNAV_PURE_PYTHON=1``
forces the numpy fallback (tests use it to run both routes).
"""

import os

from arraynav import _fallback

if os.environ.get("ARRAYNAV_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from arraynav import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

exp_so3 = _impl.exp_so3
log_so3 = _impl.log_so3
rotation_angle = _impl.rotation_angle
geodesic = _impl.geodesic
direction_cosines = _impl.direction_cosines
fit_attitude = _impl.fit_attitude
