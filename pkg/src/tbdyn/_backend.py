"""Kernel backend selection: compiled extension if available, else pure Python.

Set ``TBDYN_FORCE_PY=1`` to force the pure-Python kernels even when the
compiled extension is importable (used to compare the two).
"""

from __future__ import annotations

import logging
import os

from . import _em_py

log = logging.getLogger("tbdyn.backend")

if os.environ.get("TBDYN_FORCE_PY", "") not in ("", "0"):
    _impl = _em_py
else:
    try:
        from . import _em_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _em_py
        log.info("compiled kernels unavailable; using the pure-Python fallback")

BACKEND = _impl.BACKEND_NAME
demographic_chunk = _impl.demographic_chunk
environmental_chunk = _impl.environmental_chunk

python_kernels = _em_py


def compiled_kernels():
    """The compiled kernel module, or None when the extension is missing."""
    try:
        from . import _em_cy
        return _em_cy
    except ImportError:
        return None
