"""Backend selection for the hot inner-loop kernel.

Prefers the compiled extension ``mshedge._prg`` and falls back to the
pure-numpy implementation when the extension was not built.  Set the
environment variable ``MSHEDGE_PURE_PYTHON=1`` before import to force the
fallback (used by tests and the backend benchmark).
"""

from __future__ import annotations

import os

from . import _prg_py

if os.environ.get("MSHEDGE_PURE_PYTHON"):
    prg_solve = _prg_py.prg_solve
    BACKEND = "python"
else:
    try:
        from ._prg import prg_solve  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        prg_solve = _prg_py.prg_solve
        BACKEND = "python"

__all__ = ["prg_solve", "BACKEND"]
