"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``SSDMOTION_BACKEND=python`` to force the fallback.
"""

import logging
import os

from . import _pykernels

logger = logging.getLogger(__name__)

_FUNCS = ("fk_forward", "adamw_step", "masked_window_adamw_step")


def _load(name):
    if name == "python":
        return _pykernels
    from . import _ckernels

    return _ckernels


def available_backends():
    out = ["python"]
    try:
        _load("compiled")
    except ImportError:
        pass
    else:
        out.insert(0, "compiled")
    return out


def get_backend(name):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown kernel backend {name!r}")
    return _load(name)


def set_backend(name):
    """Switch the module-level kernel functions to another backend."""
    global BACKEND
    mod = get_backend(name)
    for fn in _FUNCS:
        globals()[fn] = getattr(mod, fn)
    BACKEND = name


BACKEND = "python"
_requested = os.environ.get("SSDMOTION_BACKEND", "").lower()
if _requested == "python":
    set_backend("python")
else:
    try:
        set_backend("compiled")
    except ImportError:
        if _requested == "compiled":
            raise
        logger.debug("compiled kernels unavailable, using numpy fallback")
        set_backend("python")
