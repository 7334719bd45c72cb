"""Kernel backend selection.

The scan's inner loops live in a small compiled extension with a
pure-NumPy twin.  The compiled module is preferred when importable; the
``GDCSCAN_BACKEND`` environment variable (``auto`` / ``compiled`` /
``python``) overrides the choice at import time, and :func:`get_backend`
selects explicitly (used by the benchmark to compare both).
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_py


def get_backend(name: str = "auto"):
    """Return the kernel module for ``name``.

    ``compiled`` raises ImportError when the extension is missing; ``auto``
    silently falls back to the NumPy implementation.
    """
    if name == "python":
        return _kernels_py
    if name in ("auto", "compiled"):
        try:
            from . import _kernels  # noqa: PLC0415

            return _kernels
        except ImportError:
            if name == "compiled":
                raise
            return _kernels_py
    raise ValueError(f"unknown backend {name!r} (expected auto/compiled/python)")


_requested = os.environ.get("GDCSCAN_BACKEND", "auto")
if _requested not in ("auto", "compiled", "python"):
    warnings.warn(f"ignoring unknown GDCSCAN_BACKEND={_requested!r}; using auto")
    _requested = "auto"

kernels = get_backend(_requested)

BACKEND_NAME = "compiled" if kernels.IS_COMPILED else "python"


def set_backend(name: str):
    """Swap the active kernel module; returns the previous one.

    Benchmark plumbing; not meant to be called while a scan is running.
    """
    global kernels, BACKEND_NAME
    previous = kernels
    kernels = get_backend(name)
    BACKEND_NAME = "compiled" if kernels.IS_COMPILED else "python"
    return previous
