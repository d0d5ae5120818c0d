"""Analytic variance quantities for zero counts.

The second Wiener chaos of the zero-count functional gives a lower bound
on its variance, available both in time and in frequency:

    (1/4pi) int [C^2 + C''^2 - 2 C'^2](z) psi(z) dz
      = (1/4pi) iint (1 + xy)^2 |phi_hat(x + y)|^2 mu(dx) mu(dy),

with ``psi(z) = int phi(s + z) phi(s) ds``.  Localising the frequency
integral near the antidiagonal ``x + y = 0`` gives the explicit bounds
:func:`bound_var_phi_mu` (quadratic growth from atoms off ``{-1, 1}``) and
:func:`bound_lin` (at least linear growth in general).
"""
import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize, special

from . import spectral as sp
from .covariance import CovarianceKernel
from .errors import DegenerateMeasureError, QuadratureError, UnknownStructureError
from .quadrature import filon_cos, integrate
from .simulate import Indicator, PiecewiseConstant, count_zeros, sample_atomic, stream

SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class HermiteCoefficients:
    """Coefficients ``a_k`` (of ``H_k(X)``) and ``d_k`` (of ``H_k(X')``); odd ones vanish."""

    q: int = 2
    a: dict = field(default_factory=lambda: {0: 1.0 / SQRT2PI, 2: 1.0 / (2.0 * SQRT2PI)})
    d: dict = field(default_factory=lambda: {0: 1.0, 2: -0.5})

    def __post_init__(self):
        if self.q % 2:
            raise ValueError("chaos order must be even")
        if self.q > 2:
            raise ValueError("coefficients are tabulated only up to order 2")

    def chaos_weights(self, q=2):
        """``a_k d_{q-k}`` for even ``k <= q``."""
        return {k: self.a[k] * self.d[q - k] for k in range(0, q + 1, 2)}


def kac_rice_mean(K, T):
    """Expected number of zeros on ``[-T, T]``: ``(2T/pi) sqrt(-C''(0)/C(0))``."""
    c0 = K.eval(0.0, 0)
    c2 = K.eval(0.0, 2)
    if not (math.isfinite(c2) and c2 < 0.0 and c0 > 0.0):
        raise DegenerateMeasureError("Kac-Rice needs C(0) > 0 and a finite C''(0) < 0")
    return 2.0 * T / math.pi * math.sqrt(-c2 / c0)


class _Evaluator:
    def __init__(self, f, error=0.0, support=None):
        self.f, self.error, self.support = f, error, support

    def __call__(self, z):
        return self.f(z)


def convolution_square(phi):
    """``phi * phi`` with an error bound (zero for piecewise-constant ``phi``)."""
    lo, hi = phi.support
    err = 0.0 if isinstance(phi, PiecewiseConstant) else phi.quadrature_error()
    return _Evaluator(phi.convolution_square, err, (2 * lo, 2 * hi))


@dataclass
class PhiConstants:
    integral: float
    alpha: float  # |phi_hat| >= |int phi| / 2 on [-alpha, alpha]
    c_phi: float  # (int phi)^2 / (16 pi): consistent with the 1/(4 pi) chaos prefactor
    c_phi_unscaled: float  # (int phi)^2 / 4, the bare Fourier lower bound


def phi_constants(phi):
    I = phi.integral()
    if I == 0.0:
        return PhiConstants(0.0, 0.0, 0.0, 0.0)
    half = abs(I) / 2.0
    length = phi.support[1] - phi.support[0]
    step = math.pi / (8.0 * max(length, 1e-300))
    g = lambda x: float(np.abs(phi.fourier([x])[0])) - half
    x = 0.0
    while g(x + step) > 0.0:
        x += step
    alpha = optimize.brentq(g, x, x + step, xtol=1e-14)
    return PhiConstants(I, alpha, I * I / (16.0 * math.pi), I * I / 4.0)


def _time_breakpoints(phi):
    if isinstance(phi, PiecewiseConstant):
        return [b for b in phi.lag_breakpoints() if b >= 0.0]
    lo, hi = phi.support
    return [0.0, hi - lo]


def chaos2_variance_time(K, phi, tol=1e-10):
    """``(1/4pi) int [C^2 + C''^2 - 2C'^2](z) psi(z) dz`` with ``psi`` the autocorrelation of ``phi``."""
    xmax = max(K.support_bound(), 1e-12)

    def f(z):
        c, c1, c2 = K.eval(z, 0), K.eval(z, 1), K.eval(z, 2)
        return (c * c + c2 * c2 - 2.0 * c1 * c1) * phi.autocorrelation(z)

    # psi and the bracket are even: integrate over z >= 0 and double
    val, err = integrate(f, _time_breakpoints(phi), 4.0 / xmax, tol=tol)
    scale = max(1.0, K.eval(0.0, 0) ** 2 + K.second_moment ** 2)
    if err > tol * scale * max(1.0, abs(val)):
        raise QuadratureError("chaos-2 time integral did not converge", [val])
    return 2.0 * val / (4.0 * math.pi)


def _two_sided(mu):
    pts, ms = [], []
    for f, m in mu.pairs:
        if f == 0.0:
            pts.append(0.0)
            ms.append(m)
        else:
            pts += [f, -f]
            ms += [0.5 * m, 0.5 * m]
    return np.asarray(pts), np.asarray(ms)


def _density_pieces(d):
    """Breakpoints and a vectorised pdf on the whole line."""
    if d.kind == "uniform":
        return [-d.width, d.width], d.pdf, d.width
    if d.kind == "gaussian":
        b = d.width * math.sqrt(2.0) * float(special.erfcinv(1e-17))
        return [-b, 0.0, b], d.pdf, b
    g = np.asarray(d.grid)
    pts = sorted(set((-g).tolist() + g.tolist()))
    return pts, d.pdf, float(g[-1])


def _inner_density_pair(d1, d2, u, weight):
    """``int weight(x, u - x) f1(x) f2(u - x) dx`` for each ``u``."""
    if d1 is d2 and d1.kind == "gaussian" and weight is _w_chaos:
        # X | X + Y = u is N(u/2, s^2/2): closed form
        s2 = d1.width ** 2
        v = s2 / 2.0
        a = 1.0 + u * u / 4.0
        dens = d1.mass ** 2 * np.exp(-u * u / (4.0 * s2)) / math.sqrt(4.0 * math.pi * s2)
        return dens * (a * a - 2.0 * a * v + 3.0 * v * v)
    b1, p1, r1 = _density_pieces(d1)
    b2, p2, r2 = _density_pieces(d2)
    nodes, w = np.polynomial.legendre.leggauss(8)
    out = np.empty(u.size)
    for i, ui in enumerate(u):
        lo, hi = max(-r1, ui - r2), min(r1, ui + r2)
        if hi <= lo:
            out[i] = 0.0
            continue
        bp = [lo, hi] + [x for x in b1 if lo < x < hi] + [ui - x for x in b2 if lo < ui - x < hi]
        edges = np.unique(bp)
        # refine so that every panel is resolved for smooth (Gaussian) factors
        width = min(r1, r2) / 16.0
        fine = [edges[:1]]
        for a, c in zip(edges[:-1], edges[1:]):
            k = max(1, int(math.ceil((c - a) / width)))
            fine.append(np.linspace(a, c, k + 1)[1:])
        e = np.concatenate(fine)
        a, h = e[:-1, None], (e[1:] - e[:-1])[:, None]
        # evaluate one-sided limits away from jumps by using interior nodes only
        xs = a + 0.5 * h * (nodes[None, :] + 1.0)
        vals = weight(xs, ui - xs) * p1(xs) * p2(ui - xs)
        out[i] = float(np.sum(vals * 0.5 * h * w[None, :]))
    return out


def _w_chaos(x, y):
    return (1.0 + x * y) ** 2


def _components(mu, w=1.0):
    if isinstance(mu, sp.Mixture):
        out = []
        for wc, c in zip(mu.weights, mu.components):
            out.extend(_components(c, w * wc))
        return out
    if isinstance(mu, sp.CosineProduct):
        raise UnknownStructureError("frequency-domain double integrals need atoms or densities")
    return [(w, mu)]


def _pair_spectral(c1, c2, phi, tol):
    if isinstance(c1, sp.Atomic) and isinstance(c2, sp.Atomic):
        x, mx = _two_sided(c1)
        y, my = _two_sided(c2)
        xx, yy = np.meshgrid(x, y, indexing="ij")
        F2 = phi.fourier_abs2((xx + yy).ravel()).reshape(xx.shape)
        return float(np.einsum("i,j,ij->", mx, my, (1.0 + xx * yy) ** 2 * F2)), 0.0
    if isinstance(c2, sp.Atomic):
        c1, c2 = c2, c1
    if isinstance(c1, sp.Atomic):
        x, mx = _two_sided(c1)
        bp, pdf, r = _density_pieces(c2)
        total, err = 0.0, 0.0
        for xi, mi in zip(x, mx):
            f = lambda y, xi=xi: (1.0 + xi * y) ** 2 * phi.fourier_abs2(xi + y) * pdf(y)
            v, e = integrate(f, bp, _uwidth(phi, r), tol=tol)
            total += mi * v
            err += mi * e
        return total, err
    bp1, _, r1 = _density_pieces(c1)
    bp2, _, r2 = _density_pieces(c2)
    R = r1 + r2
    g = lambda u: _inner_density_pair(c1, c2, u, _w_chaos) * phi.fourier_abs2(u)
    ubp = sorted(set([-R, R] + [a + b for a in bp1 for b in bp2]))
    return integrate(g, ubp, _uwidth(phi, R), tol=tol)


def _uwidth(phi, r):
    # phi_hat^2 oscillates with period about 2 pi / length(supp phi)
    length = phi.support[1] - phi.support[0]
    return min(r / 8.0, 2.0 / max(length, 1e-12))


def chaos2_variance_spectral(mu, phi, tol=1e-10):
    """``(1/4pi) iint (1 + xy)^2 |phi_hat(x + y)|^2 mu(dx) mu(dy)``."""
    comps = _components(mu)
    total = 0.0
    for i, (w1, c1) in enumerate(comps):
        for j, (w2, c2) in enumerate(comps):
            if j < i:
                continue
            v, _ = _pair_spectral(c1, c2, phi, tol)
            total += (1.0 if i == j else 2.0) * w1 * w2 * v
    return total / (4.0 * math.pi)


def bound_var_phi_mu(mu, T, c_phi, alpha=1.0, tol=1e-10):
    """``c_phi T^2 iint 1{|T(x + y)| < alpha} (1 + xy)^2 mu(dx) mu(dy)``."""
    if not T > 0.0:
        raise ValueError("T must be positive")
    band = alpha / T
    comps = _components(mu)
    total = 0.0
    for i, (w1, c1) in enumerate(comps):
        for j, (w2, c2) in enumerate(comps):
            if j < i:
                continue
            v = _pair_band(c1, c2, band, tol)
            total += (1.0 if i == j else 2.0) * w1 * w2 * v
    return c_phi * T * T * total


def _pair_band(c1, c2, band, tol):
    if isinstance(c1, sp.Atomic) and isinstance(c2, sp.Atomic):
        x, mx = _two_sided(c1)
        y, my = _two_sided(c2)
        xx, yy = np.meshgrid(x, y, indexing="ij")
        ind = np.abs(xx + yy) < band
        return float(np.einsum("i,j,ij->", mx, my, ind * (1.0 + xx * yy) ** 2))
    if isinstance(c2, sp.Atomic):
        c1, c2 = c2, c1
    if isinstance(c1, sp.Atomic):
        x, mx = _two_sided(c1)
        bp, pdf, r = _density_pieces(c2)
        total = 0.0
        for xi, mi in zip(x, mx):
            lo, hi = -xi - band, -xi + band
            f = lambda y, xi=xi: (1.0 + xi * y) ** 2 * pdf(y)
            pts = [lo, hi] + [b for b in bp if lo < b < hi]
            v, _ = integrate(f, pts, band / 4.0, tol=tol)
            total += mi * v
        return total
    g = lambda u: _inner_density_pair(c1, c2, u, _w_chaos)
    if c1 is c2 and c1.kind == "gaussian":
        return integrate(g, [-band, 0.0, band], band / 4.0, tol=tol)[0]
    return integrate(g, [-band, 0.0, band], band / 4.0, tol=tol, max_levels=4)[0]


@dataclass
class Restriction:
    measure: object
    label: str
    epsilon: float
    set_bounds: tuple  # (lo, hi) on |x|


def restricted_measure(mu, epsilon=0.1):
    """``mu`` restricted to ``{|x| >= 1 + eps}``, or else to ``{|x| <= 1 - eps}``.

    Symmetric sets keep ``C_eps`` real, which the localisation argument
    needs; they are chosen in this order, the first with positive mass.
    """
    for label, lo, hi in (("outer", 1.0 + epsilon, math.inf), ("inner", 0.0, 1.0 - epsilon)):
        if hi <= lo:
            continue
        nu = sp.restrict(mu, lo, hi)
        if nu is not None and sp.total_mass(nu) > 0.0:
            return Restriction(nu, label, epsilon, (lo, hi))
    raise DegenerateMeasureError("restricted measure has zero mass for both candidate sets")


def lin_constant(phi, restriction, T_min):
    """``c'_phi`` valid for every ``T >= T_min``.

    It combines ``c_phi``, the infimum of ``(1 + xy)^2`` over the band
    ``|x + y| < 1/T`` inside the restriction set, and the Fourier
    normalisation ``Delta_T(x) = (1/(pi T)) int sinc(t/T)^2 e^{2itx} dt``.
    """
    pc = phi_constants(phi)
    eps = restriction.epsilon
    a = min(pc.alpha, 1.0)
    if restriction.label == "inner":
        kappa = (1.0 - (1.0 - eps) ** 2) ** 2
    else:
        r = 1.0 + eps
        gap = r * r - 1.0 - r / T_min
        if gap <= 0.0:
            raise ValueError("T_min too small for the outer restriction set")
        kappa = gap * gap
    return pc.c_phi * kappa * a / math.pi


def bound_lin(K_eps, T, c_lin, tol=1e-10):
    """``c'_phi sin(1)^2 T int_{-T}^{T} C_eps(2t)^2 dt``."""
    if sp.total_mass(K_eps.source) <= 0.0:
        raise DegenerateMeasureError("restricted measure has zero mass")
    xmax = max(K_eps.support_bound(), 1e-12)
    f = lambda t: K_eps.eval(2.0 * t, 0) ** 2
    val, _ = integrate(f, [0.0, float(T)], 1.0 / xmax, tol=tol)
    return c_lin * math.sin(1.0) ** 2 * T * 2.0 * val


@dataclass
class DeltaKernelCheck:
    max_error: float
    resolved_constant: float  # c with Delta_T(x) = c int sinc(t/T)^2 e^{2itx} dt
    printed_constant: float  # 2 T^-1 / sqrt(2 pi)
    printed_ratio: float
    values: list


def _sinc2_cos_integral(omega, S=200.0, h=0.005):
    """``int_0^inf sinc(s)^2 cos(omega s) ds``: Filon on ``[0, S]`` plus the analytic tail."""
    n = int(round(S / h))
    n += n % 2 == 1
    s = np.linspace(0.0, S, n + 1)
    f = np.sinc(s / np.pi) ** 2
    head = filon_cos(f, S / n, omega)

    def tail(k):
        # int_S^inf cos(k s) / s^2 ds
        k = abs(k)
        if k == 0.0:
            return 1.0 / S
        si, _ = special.sici(k * S)
        return math.cos(k * S) / S - k * (math.pi / 2.0 - si)

    # sin^2 s = (1 - cos 2s) / 2
    rest = 0.5 * tail(omega) - 0.25 * (tail(omega + 2.0) + tail(omega - 2.0))
    return head + rest


def delta_kernel_identity_check(T, x_grid):
    """Compare ``Delta_T(x) = (1 - |Tx|)^+`` with its Fourier integral on ``x_grid``.

    The constant in front of the integral is resolved from the value at
    ``x = 0`` and returned together with the printed prefactor.
    """
    x = np.asarray(x_grid, float)
    # int sinc(t/T)^2 e^{2itx} dt = 2 T int_0^inf sinc(s)^2 cos(2 x T s) ds
    integ = np.array([2.0 * T * _sinc2_cos_integral(2.0 * xi * T) for xi in x])
    c = 1.0 / (2.0 * T * _sinc2_cos_integral(0.0))
    lhs = np.maximum(0.0, 1.0 - np.abs(T * x))
    rhs = c * integ
    printed = 2.0 / (T * SQRT2PI)
    return DeltaKernelCheck(float(np.max(np.abs(lhs - rhs))), c, printed, printed / c,
                            list(zip(x.tolist(), lhs.tolist(), rhs.tolist())))


def _common_frequency(freqs, max_den=1000, rtol=1e-9):
    nz = [f for f in freqs if f > 0.0]
    if not nz:
        raise ValueError("no positive frequency")
    base = min(nz)
    ratios = []
    for f in nz:
        r = Fraction(f / base).limit_denominator(max_den)
        if abs(float(r) - f / base) > rtol * f / base:
            raise ValueError("incommensurable frequencies")
        ratios.append(r)
    L = math.lcm(*[r.denominator for r in ratios])
    ints = [int(r * L) for r in ratios]
    return base / L * math.gcd(*ints)


@dataclass
class PeriodicCoefficient:
    coefficient: float
    var_Q: float
    mean_Q: float
    period: float
    n_reps: int


def periodic_quadratic_coefficient(mu, phi, n_reps, seed, dt=None, refine_tol=1e-10):
    """Monte Carlo ``var(Q) (int phi)^2 / P^2`` where ``Q`` counts zeros in one period ``P``."""
    if not isinstance(mu, sp.Atomic):
        raise TypeError("periodic coefficient needs an Atomic measure")
    omega = _common_frequency(mu.freqs)
    P = 2.0 * math.pi / omega
    I = phi.integral()
    dt = dt or min(0.05, P / 64.0)
    n = int(math.ceil(P / dt)) + 1
    q = np.empty(n_reps)
    for r in range(n_reps):
        path = sample_atomic(mu, 0.0, dt, n, stream(seed, 3, r))
        z = count_zeros(path, refine_tol)
        q[r] = np.count_nonzero((z.zeros >= 0.0) & (z.zeros < P))
    var_q = float(np.var(q, ddof=1)) if n_reps > 1 else math.nan
    return PeriodicCoefficient(var_q * I * I / P ** 2, var_q, float(np.mean(q)), P, n_reps)


BOUND_COLUMNS = ("T", "bound_value", "constant_used", "measure_id")


def bounds_to_csv(rows):
    """CSV text for ``(T, bound_value, constant_used, measure_id)`` rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUND_COLUMNS)
    for T, v, c, mid in rows:
        w.writerow([repr(float(T)), repr(float(v)), repr(float(c)), mid])
    return buf.getvalue()
