"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is always available.  POWERSIG_BACKEND=python|compiled forces a
choice at import time, and use_backend() switches it at runtime (the bench
command uses that to compare both).  Results are bit-identical either way.
"""
from __future__ import annotations

import os
import warnings

from . import _dtw_py

_BACKENDS = {"python": _dtw_py}

try:
    from . import _dtw_cy
    _BACKENDS["compiled"] = _dtw_cy
except ImportError:
    _dtw_cy = None


def _initial_choice() -> str:
    forced = os.environ.get("POWERSIG_BACKEND", "").strip().lower()
    if forced:
        if forced in _BACKENDS:
            return forced
        warnings.warn(f"POWERSIG_BACKEND={forced!r} unavailable; "
                      f"choices are {sorted(_BACKENDS)}")
    return "compiled" if "compiled" in _BACKENDS else "python"


_active = _initial_choice()


def active():
    return _BACKENDS[_active]


def active_name() -> str:
    return _active


def available() -> list[str]:
    return sorted(_BACKENDS)


def use_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(_BACKENDS)}")
    _active = name
