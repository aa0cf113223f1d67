"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the numpy
fallback is used. Set ``SUCPA_BACKEND=python`` or ``=compiled`` to force a
choice (forcing ``compiled`` raises if the extension was not built).
"""

from __future__ import annotations

import os

_requested = os.environ.get("SUCPA_BACKEND", "auto").strip().lower() or "auto"

if _requested in ("auto", "compiled"):
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _kernels_py as kernels

        BACKEND = "python"
elif _requested == "python":
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    raise ImportError(
        f"SUCPA_BACKEND must be 'auto', 'compiled' or 'python', got {_requested!r}"
    )


def backend_name() -> str:
    """Name of the kernel backend in use: 'compiled' or 'python'."""
    return BACKEND
