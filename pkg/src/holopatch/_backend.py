"""Select compiled kernels when available, else the numpy fallback.

``HOLOPATCH_PURE_PYTHON=1`` forces the fallback at import time. Every public
entry point also accepts ``backend="compiled" | "python"`` for benchmarks.
"""

from __future__ import annotations

import logging
import os

from . import _fallback

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if os.environ.get("HOLOPATCH_PURE_PYTHON", "").strip() not in ("", "0"):
    _compiled = None

HAVE_COMPILED = _compiled is not None
DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "python"
if not HAVE_COMPILED:
    log.debug("holopatch: compiled kernels unavailable, using numpy fallback")


def kernels(backend: str | None = None):
    name = backend or DEFAULT_BACKEND
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available in this install")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")


def available_backends() -> list[str]:
    return ["compiled", "python"] if HAVE_COMPILED else ["python"]
