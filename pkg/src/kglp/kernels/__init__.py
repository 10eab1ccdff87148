"""Backend dispatch for the hot training kernels.

Two interchangeable implementations exist: a numba-jitted one (default when
numba is importable) and a pure-numpy one. Select explicitly with the
environment variable ``KGLP_KERNELS=numba|numpy`` or at runtime via
``set_backend``. ``benchmarks/benchmark_kernels.py`` compares the two.
"""

from __future__ import annotations

import logging
import os

from . import numpy_backend

log = logging.getLogger(__name__)

_BACKENDS = {"numpy": numpy_backend}

try:
    from . import numba_backend

    _BACKENDS["numba"] = numba_backend
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - depends on environment
    NUMBA_AVAILABLE = False

_requested = os.environ.get("KGLP_KERNELS", "").strip().lower()
if _requested and _requested not in _BACKENDS:
    log.warning(
        "KGLP_KERNELS=%r not available (choices: %s); falling back to default",
        _requested,
        ", ".join(sorted(_BACKENDS)),
    )
    _requested = ""
_active = _requested or ("numba" if NUMBA_AVAILABLE else "numpy")


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; choices: {available_backends()}")
    _active = name


def get_backend(name: str | None = None):
    return _BACKENDS[name or _active]


def transe_pass(A, R, ps, pp, po, ns, no, gamma, use_l1):
    return _BACKENDS[_active].transe_pass(A, R, ps, pp, po, ns, no, gamma, use_l1)


def mwnn_pass(A, Rv, W, beta, mask, ps, pp, po, negs, lam1, lam2):
    return _BACKENDS[_active].mwnn_pass(A, Rv, W, beta, mask, ps, pp, po, negs, lam1, lam2)
