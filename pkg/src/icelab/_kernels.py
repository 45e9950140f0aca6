"""Kernel backend selection.

The compiled Cython extension is preferred when it imported cleanly; the
pure-NumPy module is the fallback.  ``ICELAB_KERNELS=python|cython`` forces a
backend (the benchmark uses this to time both).
"""

import os

from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:  # pragma: no cover - depends on build environment
    _kernels_cy = None

_forced = os.environ.get("ICELAB_KERNELS", "").strip().lower()
if _forced in ("python", "py"):
    _impl = _kernels_py
elif _forced in ("cython", "cy", "c"):
    if _kernels_cy is None:
        raise ImportError("ICELAB_KERNELS=cython but the extension is not built")
    _impl = _kernels_cy
else:
    _impl = _kernels_cy if _kernels_cy is not None else _kernels_py

BACKEND = _impl.BACKEND
ggd_eval = _impl.ggd_eval


def available_backends():
    mods = {"python": _kernels_py}
    if _kernels_cy is not None:
        mods["cython"] = _kernels_cy
    return mods
