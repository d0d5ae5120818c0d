"""Covariance kernels and analytic diagnostics.

:class:`CovarianceKernel` evaluates ``C``, ``C'`` and ``C''`` from a spectral
measure.  The diagnostics probe the integrability conditions on ``C`` that
decide how the zero-count variance grows: Geman's condition near the
origin, L2 conditions at infinity, Cesaro means and near-recurrences of
``|C|`` to 1.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .bernoulli import cosprod_values
from .quadrature import integrate, simpson

_GL8 = np.polynomial.legendre.leggauss(8)
_SERIES_CUT = 1.0
_CHUNK = 1 << 20


def _sinc_family(x, order):
    """``sinc(x) = sin(x)/x`` and its first two derivatives, series near 0."""
    x = np.asarray(x, float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUT
    xs = x[small]
    x2 = xs * xs
    # sinc = sum_k (-1)^k x^{2k}/(2k+1)!, differentiated term by term
    acc = np.zeros_like(xs)
    if order == 0:
        for k in range(11, -1, -1):
            acc = acc * x2 + (-1) ** k / math.factorial(2 * k + 1)
    elif order == 1:
        for k in range(11, 0, -1):
            acc = acc * x2 + (-1) ** k * 2 * k / math.factorial(2 * k + 1)
        acc = acc * xs
    else:
        for k in range(11, 0, -1):
            acc = acc * x2 + (-1) ** k * 2 * k * (2 * k - 1) / math.factorial(2 * k + 1)
    out[small] = acc
    xl = x[~small]
    s, c = np.sin(xl), np.cos(xl)
    if order == 0:
        out[~small] = s / xl
    elif order == 1:
        out[~small] = (xl * c - s) / xl ** 2
    else:
        out[~small] = ((2.0 - xl * xl) * s - 2.0 * xl * c) / xl ** 3
    return out


def _poly_coeffs(x0, y0, slope, k):
    """Coefficients (in ``u = x - x0``) of ``x**k * (y0 + slope u)``."""
    # (x0 + u)^k by binomial expansion, times the linear factor
    base = [math.comb(k, j) * x0 ** (k - j) for j in range(k + 1)]
    out = [np.zeros_like(x0) for _ in range(k + 2)]
    for j, b in enumerate(base):
        out[j] = out[j] + b * y0
        out[j + 1] = out[j + 1] + b * slope
    return out


def _tabulated_moments(dens, t, k):
    """``int x**k f(x) e^{itx} dx`` over the positive half line."""
    x0, x1, y0, y1 = dens.segments()
    h = x1 - x0
    slope = (y1 - y0) / h
    nodes, weights = _GL8
    coeffs = _poly_coeffs(x0, y0, slope, k)
    out = np.empty(t.size, complex)
    step = max(1, _CHUNK // (8 * max(1, x0.size)))
    for s in range(0, t.size, step):
        tt = t[s:s + step, None]
        theta = tt * h[None, :]
        # Gauss-Legendre on panels with at most 4 radians of oscillation
        xs = x0[:, None] + 0.5 * h[:, None] * (nodes[None, :] + 1.0)
        fx = (y0[:, None] + slope[:, None] * (xs - x0[:, None])) * xs ** k
        wts = 0.5 * h[:, None] * weights[None, :] * fx
        gl = np.einsum("sn,msn->ms", wts, np.exp(1j * tt[:, :, None] * xs[None, :, :]))
        # exact moments I_j = int_0^h u^j e^{itu} du on wider panels
        with np.errstate(divide="ignore", invalid="ignore"):
            it = 1j * np.where(tt == 0.0, 1.0, tt)
            eh = np.exp(1j * theta)
            ij = (eh - 1.0) / it
            ex = coeffs[0][None, :] * ij
            hp = np.ones_like(theta)
            for j in range(1, k + 2):
                hp = hp * h[None, :]
                ij = (hp * eh - j * ij) / it
                ex = ex + coeffs[j][None, :] * ij
            ex = ex * np.exp(1j * tt * x0[None, :])
        out[s:s + step] = np.where(np.abs(theta) <= 4.0, gl, ex).sum(axis=1)
    return out


class CovarianceKernel:
    """Evaluator for ``C(t) = int e^{ixt} mu(dx)`` and its derivatives.

    ``tol`` is the absolute accuracy target.  Closed forms are used for atoms
    and builtin densities, exact piecewise moments for tabulated densities,
    and a truncated product with a rigorous tail bound for cosine products.
    """

    def __init__(self, source, tol=1e-12):
        if not isinstance(source, sp.VARIANTS):
            raise TypeError("source must be a spectral measure")
        self.source = source
        self.error_tolerance = float(tol)
        self._m2 = sp.second_moment(source)
        self._m4 = None
        try:
            self._m4 = sp.fourth_moment(source)
        except ValueError:
            pass

    @property
    def second_moment(self):
        return self._m2

    @property
    def fourth_moment(self):
        return self._m4

    def support_bound(self, quantile=1e-6):
        return sp.support_bound(self.source, quantile)

    def __call__(self, t, order=0):
        return self.eval(t, order)

    def eval(self, t, order=0):
        """``C``, ``C'`` or ``C''`` at ``t`` (scalar or array)."""
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, float))
        a = np.abs(tt)
        v = self._eval_abs(self.source, a, order, 1.0)
        if order == 1:
            v = np.where(tt < 0.0, -v, v)
            v = np.where(tt == 0.0, 0.0, v)
        return float(v[0]) if scalar else v

    def _eval_abs(self, mu, a, order, w):
        if isinstance(mu, sp.Atomic):
            f = np.asarray(mu.freqs)
            m = np.asarray(mu.masses) * w
            out = np.zeros_like(a)
            for fk, mk in zip(f, m):
                if order == 0:
                    out += mk * np.cos(fk * a)
                elif order == 1:
                    out -= mk * fk * np.sin(fk * a)
                else:
                    out -= mk * fk * fk * np.cos(fk * a)
            return out
        if isinstance(mu, sp.Density):
            m = mu.mass * w
            s = mu.width
            if mu.kind == "uniform":
                return m * s ** order * _sinc_family(s * a, order)
            if mu.kind == "gaussian":
                g = np.exp(-0.5 * (s * a) ** 2)
                if order == 0:
                    return m * g
                if order == 1:
                    return -m * s * s * a * g
                return m * s * s * (s * s * a * a - 1.0) * g
            e = _tabulated_moments(mu, a, order)
            if order == 0:
                return 2.0 * w * e.real
            if order == 1:
                return -2.0 * w * e.imag
            return -2.0 * w * e.real
        if isinstance(mu, sp.CosineProduct):
            vals, _, _ = cosprod_values(mu.sequence, a, self.error_tolerance / (mu.mass * w), order)
            return mu.mass * w * vals
        out = np.zeros_like(a)
        for wc, c in zip(mu.weights, mu.components):
            out += self._eval_abs(c, a, order, w * wc)
        return out


@dataclass
class DiagnosticReport:
    quantity: str
    rows: list = field(default_factory=list)  # (parameter, estimate, error_bound)
    verdict: str = "inconclusive"
    meta: dict = field(default_factory=dict)

    @property
    def estimates(self):
        return [r[1] for r in self.rows]

    def to_dict(self):
        return {"quantity": self.quantity, "verdict": self.verdict, "meta": self.meta,
                "rows": [{"parameter": p, "estimate": e, "error_bound": b} for p, e, b in self.rows]}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["parameter", "estimate", "error_bound"])
        for p, e, b in self.rows:
            w.writerow([repr(float(p)), repr(float(e)), repr(float(b))])
        return buf.getvalue()


DIVERGE_RATIO = 1.9
CONVERGE_RTOL = 1e-3


def verdict(estimates, floor=1e-12):
    """Classify a refinement sequence.

    ``diverges`` when the last estimate is (within 5%) at least double the
    previous one; ``converges`` when the last relative change is below
    ``CONVERGE_RTOL`` or both are below ``floor``; ``inconclusive``
    otherwise.
    """
    if len(estimates) < 2:
        return "inconclusive"
    a, b = abs(estimates[-2]), abs(estimates[-1])
    if a <= floor and b <= floor:
        return "converges"
    if b >= DIVERGE_RATIO * a and b > floor:
        return "diverges"
    if abs(estimates[-1] - estimates[-2]) < CONVERGE_RTOL * max(a, b):
        return "converges"
    return "inconclusive"


GEMAN_SERIES_CUT = 1e-4


def geman_integral_scan(g, delta, levels=6, series=None, tol=1e-10):
    """Partial integrals of ``g`` over ``[eps_n, delta]`` with ``eps_n = delta e^{-2^n}``.

    ``series(t1, t2)`` optionally replaces the integral over the part of
    ``[t1, t2]`` below ``GEMAN_SERIES_CUT``.  The upper part is integrated in
    the variable ``log t`` so that every refinement level costs the same.
    """
    rows = []
    cut = min(GEMAN_SERIES_CUT, delta) if series is not None else 0.0
    upper_cache = {}

    def log_part(lo, hi):
        if hi <= lo:
            return 0.0, 0.0
        key = (lo, hi)
        if key not in upper_cache:
            f = lambda s: g(np.exp(s)) * np.exp(s)
            upper_cache[key] = integrate(f, [math.log(lo), math.log(hi)], 1.0, tol=tol)
        return upper_cache[key]

    for n in range(1, levels + 1):
        eps = delta * math.exp(-float(2 ** n))
        if series is not None:
            v_hi, e_hi = log_part(max(eps, cut), delta)
            v_lo = series(eps, cut) if eps < cut else 0.0
            val, err = v_hi + v_lo, e_hi
        else:
            # split at the previous level so cached panels are reused
            prev = delta if n == 1 else delta * math.exp(-float(2 ** (n - 1)))
            v0, e0 = (rows[-1][1], rows[-1][2]) if rows else (0.0, 0.0)
            v1, e1 = log_part(eps, prev)
            val, err = v0 + v1, e0 + e1
        rows.append((eps, val, err))
    return DiagnosticReport("geman", rows, verdict([r[1] for r in rows]), {"delta": delta})


def geman_check(K, delta=0.1, levels=6, tol=1e-10):
    """Geman integral ``int_eps^delta (C'(t) - C''(0) t) / t**2 dt`` as ``eps -> 0``."""
    c2 = K.eval(0.0, 2)

    def g(t):
        t = np.asarray(t, float)
        return (K.eval(t, 1) - c2 * t) / (t * t)

    series = None
    if K.fourth_moment is not None:
        m4 = K.fourth_moment
        # C'(t) - C''(0) t = m4 t^3 / 6 + O(t^5)
        series = lambda t1, t2: m4 / 12.0 * (t2 * t2 - t1 * t1)
    rep = geman_integral_scan(g, delta, levels, series, tol)
    rep.meta["series_cut"] = GEMAN_SERIES_CUT if series else None
    return rep


def _step(K, harmonics=1):
    xmax = K.support_bound()
    if xmax <= 0.0:
        return 0.1
    return (2.0 * math.pi / (harmonics * xmax)) / 8.0


def _odd_grid(lo, hi, h):
    n = max(2, int(math.ceil((hi - lo) / h)))
    n += n % 2
    return np.linspace(lo, hi, n + 1), (hi - lo) / n


def _squared_integrand(K, which):
    if which == "C":
        return lambda t: K.eval(t, 0) ** 2
    if which == "C''":
        return lambda t: K.eval(t, 2) ** 2
    if which == "C+C''":
        return lambda t: (K.eval(t, 0) + K.eval(t, 2)) ** 2
    raise ValueError(f"unknown L2 quantity {which!r}")


DEFAULT_TMAX = tuple(2.0 ** k for k in range(4, 13))


def l2_condition_scan(K, which="C", t_max_grid=DEFAULT_TMAX):
    """Partial integrals ``int_0^{t_max} F(t)**2 dt`` on an increasing grid.

    ``which`` is ``"C"``, ``"C''"`` or ``"C+C''"``.  Each increment is
    integrated by composite Simpson with a step of at most 1/16 of the
    shortest period, and increments are accumulated in grid order.
    """
    grid = [float(x) for x in t_max_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] <= 0.0:
        raise ValueError("t_max grid must be positive and increasing")
    F = _squared_integrand(K, which)
    h = _step(K, 2)
    rows, total, lo = [], 0.0, 0.0
    for tm in grid:
        ts, hh = _odd_grid(lo, tm, h)
        inc = simpson(F(ts), hh)
        inc_coarse = simpson(F(ts[::2]), 2 * hh) if ts.size % 4 == 1 else inc
        total += inc
        rows.append((tm, total, abs(inc - inc_coarse) / 15.0))
        lo = tm
    scale = max(1.0, K.eval(0.0, 0) ** 2 + K.second_moment ** 2)
    return DiagnosticReport(f"l2[{which}]", rows, verdict([r[1] for r in rows], 1e-12 * scale),
                            {"step": h})


def cesaro_mean(K, T, power=1):
    """``(1/T) int_0^T C(t)**power dt``."""
    if not T > 0.0:
        raise ValueError("T must be positive")
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    ts, hh = _odd_grid(0.0, float(T), _step(K, power) / 2.0)
    total = 0.0
    # accumulate in fixed-size chunks that overlap by one node
    chunk = (1 << 18) + 1
    i = 0
    while i < ts.size - 1:
        j = min(ts.size, i + chunk)
        if (j - i) % 2 == 0:
            j -= 1
        total += simpson(K.eval(ts[i:j], 0) ** power, hh)
        i = j - 1
    return total / T


def _golden_max(f, a, b, tol):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def recurrence_times(K, threshold, t_max, step=None):
    """Local maxima of ``|C|`` on ``(0, t_max]`` with ``|C| >= (1 - threshold) C(0)``.

    A grid scan keeps candidates within the interpolation slack
    ``m2 h**2 / 8`` of the threshold; golden-section search then refines
    each one.  Returns sorted ``(t, C(t))`` pairs.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    c0 = K.eval(0.0, 0)
    h = float(step) if step else _step(K)
    level = (1.0 - threshold) * c0
    slack = K.second_moment * h * h / 8.0
    absf = lambda t: abs(K.eval(t, 0))
    out = []
    n = int(math.ceil(t_max / h))
    chunk = 1 << 20
    prev_tail = None
    for s in range(0, n + 1, chunk):
        idx = np.arange(max(0, s - 1), min(n + 1, s + chunk + 1))
        ts = np.minimum(idx * h, t_max)
        v = np.abs(K.eval(ts, 0))
        for i in np.flatnonzero(v >= level - slack):
            if i == 0 or i == v.size - 1:
                if idx[i] != n:
                    continue
            if idx[i] == 0:
                continue
            left = v[i - 1]
            right = v[i + 1] if i + 1 < v.size else -np.inf
            if v[i] < left or v[i] < right:
                continue
            lo = max(ts[i] - h, 1e-12)
            hi = min(ts[i] + h, t_max)
            x, fx = _golden_max(absf, lo, hi, 1e-10 * max(1.0, ts[i]))
            if fx >= level and (prev_tail is None or x - prev_tail > h):
                out.append((float(x), K.eval(x, 0)))
                prev_tail = x
    return out
