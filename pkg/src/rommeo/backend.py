"""Kernel backend selection.

The hot numeric kernels (batched MLP forward/backward passes, which dominate
actor-critic training time) ship in two interchangeable implementations: a
numba-jitted one and a pure-numpy fallback. The active backend is chosen by
the ``ROMMEO_BACKEND`` environment variable:

* ``numba``  - force the jitted kernels (raises if numba is unavailable)
* ``numpy``  - force the pure-numpy kernels
* ``auto`` or unset - numba when importable, numpy otherwise

``benchmarks/bench_backends.py`` compares the two on the same workloads.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_ENV_VAR = "ROMMEO_BACKEND"
_active_name = ""
_active_module = _kernels_numpy


def _load_numba_kernels():
    from . import _kernels_numba

    return _kernels_numba


def select(name: str | None = None) -> str:
    """Activate a kernel backend and return its name.

    ``name=None`` re-reads the environment variable. Invalid names and a
    forced-but-missing numba raise immediately rather than degrading silently.
    """
    global _active_name, _active_module
    if name is None:
        name = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if name == "numpy":
        _active_name, _active_module = "numpy", _kernels_numpy
    elif name == "numba":
        _active_name, _active_module = "numba", _load_numba_kernels()
    elif name == "auto":
        try:
            _active_name, _active_module = "numba", _load_numba_kernels()
        except ImportError:
            _active_name, _active_module = "numpy", _kernels_numpy
    else:
        raise ValueError(f"unknown backend {name!r}; expected numba, numpy or auto")
    return _active_name


def active() -> str:
    return _active_name


def kernels():
    """Module providing ``mlp_forward`` / ``mlp_backward``."""
    return _active_module


select()
