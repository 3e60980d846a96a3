"""Kernel backend selection.

Hot numeric loops exist in two implementations: numba-jitted and pure
numpy. The active one is chosen once at import time from the
``OSKGEOM_BACKEND`` environment variable:

    OSKGEOM_BACKEND=auto    use numba when importable (default)
    OSKGEOM_BACKEND=numba   require numba, fail if missing
    OSKGEOM_BACKEND=numpy   force the pure-numpy path

Both paths are deterministic and single-threaded; they differ only in
speed (see benchmarks/bench_backends.py).
"""

import os

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False


def _resolve_choice():
    choice = os.environ.get("OSKGEOM_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if choice == "numba":
        if not NUMBA_AVAILABLE:
            raise ImportError(
                "OSKGEOM_BACKEND=numba requested but numba is not importable"
            )
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"unknown OSKGEOM_BACKEND value: {choice!r}")


ACTIVE_BACKEND = _resolve_choice()


def use_numba():
    return ACTIVE_BACKEND == "numba"
