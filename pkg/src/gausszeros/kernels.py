"""Backend dispatch for the hot numerical kernels.

Every kernel exists twice: a numba ``@njit`` loop in ``_nb_kernels`` and a
vectorised numpy version in ``_np_kernels``.  The active backend is fixed at
import time from the environment:

``GAUSSZEROS_BACKEND=numba|numpy``
    explicit choice (default ``numba`` when importable).
``GAUSSZEROS_DISABLE_NUMBA=1``
    shorthand for ``GAUSSZEROS_BACKEND=numpy``.

Both modules stay reachable as :data:`numpy_impl` and :data:`numba_impl`
(the latter ``None`` without numba) so tests and benchmarks can compare them
in one process.
"""
import os

import numpy as np

from . import _np_kernels as numpy_impl

try:
    from . import _nb_kernels as numba_impl
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None


def _select():
    choice = os.environ.get("GAUSSZEROS_BACKEND", "").strip().lower()
    if os.environ.get("GAUSSZEROS_DISABLE_NUMBA", "0") not in ("", "0", "false"):
        choice = "numpy"
    if choice not in ("", "numba", "numpy"):
        raise ValueError(f"unknown GAUSSZEROS_BACKEND {choice!r}")
    if choice == "numpy" or numba_impl is None:
        return "numpy", numpy_impl
    return "numba", numba_impl


BACKEND, _impl = _select()


def implementation(name=None):
    """Return the kernel module for ``name`` (default: active backend)."""
    if name is None:
        return _impl
    if name == "numpy":
        return numpy_impl
    if name == "numba":
        if numba_impl is None:
            raise RuntimeError("numba backend unavailable")
        return numba_impl
    raise ValueError(f"unknown backend {name!r}")


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def trig_grid(t0, dt, n, freqs, a, b):
    """Values of ``sum_k a_k cos(w_k t) + b_k sin(w_k t)`` on ``t0 + i dt``."""
    return _impl.trig_grid(float(t0), float(dt), int(n), _f64(freqs), _f64(a), _f64(b))


def classify_grid(values, tangent_tol):
    """Split a sampled path into sign changes, exact grid zeros and tangencies.

    Returns three index arrays: ``i`` with ``v[i] * v[i+1] < 0``; interior
    ``i`` with ``v[i] == 0`` and opposite-signed neighbours; and local minima
    of ``|v|`` below ``tangent_tol`` not adjacent to any sign change.
    """
    return _impl.classify_grid(_f64(values), float(tangent_tol))


def bisect_trig(lo, hi, freqs, a, b, n_iter):
    """Bisect each bracket ``[lo_j, hi_j]`` of an explicit trigonometric sum."""
    return _impl.bisect_trig(_f64(lo), _f64(hi), _f64(freqs), _f64(a), _f64(b), int(n_iter))


def bisect_grid(values, idx, t0, dt, n_iter):
    """Bisect the local cubic interpolant of grid data on ``[t_i, t_{i+1}]``."""
    return _impl.bisect_grid(_f64(values), np.ascontiguousarray(idx, np.int64),
                             float(t0), float(dt), int(n_iter))


def cosprod(t, lams, sqtail, tol, order):
    """Truncated cosine product (or its first/second derivative).

    ``lams[k]`` is the (k+1)-th frequency and ``sqtail[k]`` the sum of squares
    of all frequencies after the k-th, with ``len(sqtail) == len(lams) + 1``.
    Returns ``(values, n_used, error_bound)``.
    """
    return _impl.cosprod(_f64(np.atleast_1d(t)), _f64(lams), _f64(sqtail), float(tol), int(order))


def merge_sorted(points, masses, tol):
    """Merge sorted atoms lying within ``tol`` of their group's first point."""
    return _impl.merge_sorted(_f64(points), _f64(masses), float(tol))


def ball_mass(points, masses, r):
    """``sum_i m_i sum_{|x_j - x_i| < r} m_j`` for sorted ``points``."""
    return float(_impl.ball_mass(_f64(points), _f64(masses), float(r)))
