"""Slot-engine backend selection.

The hot per-slot loop exists twice: a Cython extension (``_core``) and a
pure-Python reference (``_fallback``).  The compiled one is used when it
imported successfully; set ``MULTICAP_FORCE_FALLBACK=1`` to force the Python
path (used by the backend-equivalence tests and the benchmark).
"""

import os

from .state import EngineState, build_engine_state, cell_budget

if os.environ.get("MULTICAP_FORCE_FALLBACK"):
    from ._fallback import run_slots

    BACKEND = "python"
else:
    try:
        from ._core import run_slots

        BACKEND = "cython"
    except ImportError:
        from ._fallback import run_slots

        BACKEND = "python"

__all__ = [
    "BACKEND",
    "EngineState",
    "build_engine_state",
    "cell_budget",
    "run_slots",
]
