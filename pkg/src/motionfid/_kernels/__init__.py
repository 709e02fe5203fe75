"""Hot numeric kernels with two interchangeable implementations.

The numba path is used when numba imports and ``MOTIONFID_DISABLE_NUMBA`` is
unset (or ``0``). Setting the variable to ``1`` selects the vectorised numpy
path. Both produce the same numbers up to floating-point rounding; the choice
never affects configuration or output formats.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

from . import _numpy

ENV_FLAG = "MOTIONFID_DISABLE_NUMBA"

_disabled = os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}
_jit = None
if not _disabled:
    try:
        from . import _numba as _jit
    except ImportError:  # numba missing or broken
        _jit = None

_impls = {"numpy": _numpy}
if _jit is not None:
    _impls["numba"] = _jit
_active = _impls.get("numba", _numpy)


def available_backends() -> list[str]:
    return sorted(_impls)


def backend() -> str:
    return "numba" if _jit is not None and _active is _jit else "numpy"


def set_backend(name: str) -> str:
    global _active
    if name not in _impls:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    prev = backend()
    _active = _impls[name]
    return prev


@contextmanager
def use_backend(name: str):
    prev = set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def dtw_batch(A, B) -> np.ndarray:
    """Cumulative DTW cost for each of the paired paths ``A[j]`` (n, d) and ``B[j]`` (m, d)."""
    return _active.dtw_batch(_f64(A), _f64(B))


def median_filter(x, k: int) -> np.ndarray:
    """Sliding median of odd length ``k`` down each column of ``x`` (T, C), edge-replicated."""
    return _active.median_filter(_f64(x), int(k))


def lfilter(b, a, x, zi) -> np.ndarray:
    """Transposed direct-form II IIR filter down each column of ``x``; ``a[0]`` must be 1."""
    return _active.lfilter(_f64(b), _f64(a), _f64(x), _f64(zi))


def svd3_batch(H):
    """One-sided Jacobi SVD of a stack of 3x3 matrices; returns (U, S, V) with ``H = U diag(S) V^T``."""
    return _active.svd3_batch(_f64(H))


def procrustes_batch(A, B, allow_reflection: bool = False, with_scale: bool = False,
                     degenerate_tol: float = 1e-12):
    """Per-frame orthogonal Procrustes mapping ``B[f]`` onto ``A[f]``.

    Returns ``(R, scale, err, status, reflected)`` where ``err[f, i]`` is the
    distance between centred ``A[f, i]`` and ``scale[f] * R[f] @ centred B[f, i]``
    and ``status[f] == 1`` marks a frame whose point set collapses to a point.
    """
    return _active.procrustes_batch(_f64(A), _f64(B), bool(allow_reflection), bool(with_scale),
                                     float(degenerate_tol))


def nearest_codes(Z, C):
    """Index (0-based, lowest on ties) and squared distance of the nearest row of ``C`` for each row of ``Z``."""
    return _active.nearest_codes(_f64(Z), _f64(C))
