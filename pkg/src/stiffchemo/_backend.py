"""Kernel backend selection.

The compiled ``_core`` extension is used when importable; otherwise the numpy
fallback.  ``STIFFCHEMO_BACKEND=python`` forces the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

HAVE_COMPILED = _core is not None


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` in {"auto", "compiled", "python"}."""
    name = name or os.environ.get("STIFFCHEMO_BACKEND", "auto")
    if name == "python":
        return _fallback
    if name == "compiled":
        if _core is None:
            raise ImportError("stiffchemo._core is not built; run `pip install -e .`")
        return _core
    if name != "auto":
        raise ValueError(f"unknown backend {name!r}")
    return _core if _core is not None else _fallback


def backend_name(mod: ModuleType) -> str:
    return "compiled" if mod is _core and _core is not None else "python"
