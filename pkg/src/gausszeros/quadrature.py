"""Quadrature helpers: composite Gauss-Legendre panels and Filon's rule."""
import numpy as np

from .errors import QuadratureError

_GL_CACHE = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def panel_edges(breakpoints, max_width):
    """Edges of panels no wider than ``max_width`` honouring ``breakpoints``."""
    bp = np.unique(np.asarray(breakpoints, float))
    edges = [bp[:1]]
    for lo, hi in zip(bp[:-1], bp[1:]):
        k = max(1, int(np.ceil((hi - lo) / max_width)))
        edges.append(np.linspace(lo, hi, k + 1)[1:])
    return np.concatenate(edges)


def gl_panels(f, edges, nodes=16):
    """Integrate vectorised ``f`` over panels delimited by ``edges``."""
    x, w = _gl(nodes)
    a = edges[:-1, None]
    h = (edges[1:] - edges[:-1])[:, None]
    pts = a + 0.5 * h * (x[None, :] + 1.0)
    vals = np.asarray(f(pts.ravel()), float).reshape(pts.shape)
    return float(np.sum(vals * (0.5 * h) * w[None, :]))


def integrate(f, breakpoints, max_width, nodes=16, tol=1e-12, max_levels=6):
    """Composite Gauss-Legendre with panel halving until two levels agree.

    Returns ``(value, error_estimate)``; raises :class:`QuadratureError`
    with the estimate trace when ``tol`` (absolute, scaled by ``max(1, |I|)``)
    is not met within ``max_levels`` halvings.
    """
    trace = []
    width = float(max_width)
    prev = None
    for _ in range(max_levels):
        val = gl_panels(f, panel_edges(breakpoints, width), nodes)
        trace.append(val)
        if not np.isfinite(val):
            raise QuadratureError("non-finite quadrature estimate", trace)
        if prev is not None:
            err = abs(val - prev)
            if err <= tol * max(1.0, abs(val)):
                return val, err
        prev = val
        width *= 0.5
    raise QuadratureError(f"no convergence to tol={tol}", trace)


def filon_cos(fvals, h, omega, a=0.0):
    """Filon's rule for ``int f(t) cos(omega t) dt`` on ``[a, a + (n-1) h]``.

    ``fvals`` holds ``f`` on the uniform grid and must have odd length.
    Exact when ``f`` is quadratic on every pair of panels.
    """
    f = np.asarray(fvals, float)
    n = f.size
    if n % 2 == 0 or n < 3:
        raise ValueError("filon_cos needs an odd number (>= 3) of samples")
    theta = omega * h
    if abs(theta) < 1e-3:
        t2 = theta * theta
        alpha = 2.0 * theta * t2 / 45.0
        beta = 2.0 / 3.0 + 2.0 * t2 / 15.0
        gamma = 4.0 / 3.0 - 2.0 * t2 / 15.0
    else:
        s, c = np.sin(theta), np.cos(theta)
        it3 = 1.0 / theta ** 3
        alpha = it3 * (theta * theta + theta * s * c - 2.0 * s * s)
        beta = 2.0 * it3 * (theta * (1.0 + c * c) - 2.0 * s * c)
        gamma = 4.0 * it3 * (s - theta * c)
    t = a + h * np.arange(n)
    ct = np.cos(omega * t)
    even = f[0::2] * ct[0::2]
    c2n = even.sum() - 0.5 * (even[0] + even[-1])
    c2n1 = np.sum(f[1::2] * ct[1::2])
    edge = f[-1] * np.sin(omega * t[-1]) - f[0] * np.sin(omega * t[0])
    return float(h * (alpha * edge + beta * c2n + gamma * c2n1))


def simpson(y, h):
    """Composite Simpson on an odd number of equispaced samples."""
    y = np.asarray(y, float)
    if y.size % 2 == 0:
        raise ValueError("simpson needs an odd number of samples")
    if y.size == 1:
        return 0.0
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))
