"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels`` takes over.  ``VFNN_BACKEND`` forces a
choice: ``cython`` (fail if the extension is missing), ``python`` or ``auto``.
"""
import importlib
import os

from . import _pykernels

__all__ = ["BACKEND", "kernels", "get_kernels", "available_backends"]


def get_kernels(name: str):
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("vfnn._ckernels")
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        get_kernels("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def _select():
    choice = os.environ.get("VFNN_BACKEND", "auto").strip().lower() or "auto"
    if choice not in ("auto", "cython", "python"):
        raise ImportError(f"VFNN_BACKEND must be auto, cython or python, got {choice!r}")
    if choice == "python":
        return "python", _pykernels
    try:
        return "cython", get_kernels("cython")
    except ImportError:
        if choice == "cython":
            raise
        return "python", _pykernels


BACKEND, kernels = _select()
