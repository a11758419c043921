"""Kernel selection.

The compiled Cython core is used when it imports; otherwise the numpy
fallback is used.  Setting ``QEMKIT_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

impl = _kernels_py
if os.environ.get("QEMKIT_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as impl  # noqa: F811
    except ImportError:  # pragma: no cover - depends on the build
        impl = _kernels_py

IMPLEMENTATION = impl.IMPLEMENTATION


def compiled_available():
    """True when the Cython extension can be imported."""
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


def get(name):
    """Return a kernel module by name (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel implementation {name!r}")
