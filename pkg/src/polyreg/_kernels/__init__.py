"""Backend selection for the hot experiment loops.

Tries the compiled Cython extension first and falls back to the pure-numpy
implementation. Override with POLYREG_BACKEND=c|py|auto.
"""
from __future__ import annotations

import os

from . import pyloops

ALGO_IDS = pyloops.ALGO_IDS
POLICY_IDS = pyloops.POLICY_IDS

_choice = os.environ.get("POLYREG_BACKEND", "auto").lower()
_fast = None
if _choice in ("auto", "c"):
    try:
        from . import _fastloops as _fast  # type: ignore[attr-defined]
    except ImportError:
        _fast = None
        if _choice == "c":
            raise ImportError(
                "POLYREG_BACKEND=c requested but the compiled extension is "
                "unavailable; reinstall with a working C toolchain")

if _choice == "py":
    _fast = None

backend = _fast if _fast is not None else pyloops
BACKEND_NAME: str = backend.BACKEND_NAME

run_lovasz_game = backend.run_lovasz_game
run_path_mw = backend.run_path_mw
run_path_fw = backend.run_path_fw


def available_backends() -> dict:
    out = {"python": pyloops}
    if _fast is not None:
        out["c"] = _fast
    else:
        try:
            from . import _fastloops  # noqa: F401
            out["c"] = _fastloops
        except ImportError:
            pass
    return out
