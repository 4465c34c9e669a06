"""Kernel backend selection.

Prefers the compiled extension, falls back to the NumPy implementation.
``BLISSTAMP_KERNEL=python`` (or ``compiled``) forces a choice; forcing
``compiled`` when the extension is missing raises at import.
"""

from __future__ import annotations

import os

from . import _kernel_py

_forced = os.environ.get("BLISSTAMP_KERNEL", "").strip().lower()

kernel = _kernel_py
KERNEL_BACKEND = "python"

if _forced != "python":
    try:
        from . import _pivot_kernel  # type: ignore[attr-defined]

        kernel = _pivot_kernel
        KERNEL_BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise


def get_kernel(name: str | None = None):
    """Kernel module by name ('python', 'compiled', or None for the default)."""
    if name is None:
        return kernel
    if name == "python":
        return _kernel_py
    if name == "compiled":
        from . import _pivot_kernel  # type: ignore[attr-defined]

        return _pivot_kernel
    raise ValueError(f"unknown kernel backend {name!r}")
