"""Kernel backend selection.

The compiled Cython core is preferred when its extension module built;
otherwise the pure-numpy fallback is used. Set CLADE_KERNELS=python (or
=compiled) to force a backend. The choice is fixed at import time, so one
process always runs one backend and stays bit-deterministic.
"""

import os

from . import _numpy


def _load(name):
    if name == "python":
        return _numpy
    from . import _core  # may raise ImportError when the extension was not built

    return _core


_forced = os.environ.get("CLADE_KERNELS", "").strip().lower()
if _forced in ("python", "numpy"):
    _impl = _numpy
elif _forced == "compiled":
    _impl = _load("compiled")
else:
    try:
        _impl = _load("compiled")
    except ImportError:
        _impl = _numpy

BACKEND = _impl.NAME

conv_out_hw = _impl.conv_out_hw
im2col = _impl.im2col
col2im = _impl.col2im
gather_class_params = _impl.gather_class_params
scatter_add_class_grads = _impl.scatter_add_class_grads


def available_backends():
    names = ["python"]
    try:
        _load("compiled")
        names.append("compiled")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the backend module for explicit side-by-side use (benchmarks, parity tests)."""
    if name not in ("python", "compiled"):
        raise ValueError(f"unknown kernel backend {name!r}")
    return _load(name)
