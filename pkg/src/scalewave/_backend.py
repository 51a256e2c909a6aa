"""Kernel selection.

The compiled extension is used when it imports; otherwise the numpy
implementations take over. ``SCALEWAVE_BACKEND`` forces a choice:
``compiled`` (fail if unavailable), ``python``, or ``auto`` (default).
"""

import logging
import os

from scalewave import _pykernels

log = logging.getLogger(__name__)

_requested = os.environ.get("SCALEWAVE_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "compiled", "python"):
    raise ImportError(f"SCALEWAVE_BACKEND must be auto, compiled or python, got {_requested!r}")

_compiled = None
if _requested != "python":
    try:
        from scalewave import _ckernels as _compiled
    except ImportError as exc:
        if _requested == "compiled":
            raise
        log.debug("compiled kernels unavailable (%s); using numpy fallback", exc)

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

NAME = "compiled" if _compiled is not None else "python"
kernels = BACKENDS[NAME]


def get(name=None):
    """Kernel module by name; ``None`` returns the active one."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available (have {sorted(BACKENDS)})") from None
