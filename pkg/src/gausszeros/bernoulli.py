"""Symmetric Bernoulli convolutions.

A non-increasing, square-summable sequence ``lam_1 >= lam_2 >= ...`` defines
the random series ``Y = sum_k lam_k eps_k`` with Rademacher signs.  Its law
is a symmetric spectral measure whose covariance is the cosine product
``prod_k cos(lam_k t)``.  This module evaluates that product, enumerates the
laws of the partial sums ``Y_N`` and computes the small-ball quantities that
drive the superquadratic variance growth of the factorial sequence.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import kernels
from .errors import ToleranceError

_KINDS = ("geometric", "factorial", "harmonic", "custom")
_KCAP = 200_000
DISTRIBUTION_CAP = 24


def _factorial_tail(N, power=1):
    """``sum_{k>N} (1/k!)**power`` summed from its leading term."""
    term = math.exp(-power * math.lgamma(N + 2))
    total = 0.0
    k = N + 1
    while term > 0.0 and term > 1e-18 * total:
        total += term
        k += 1
        term /= k ** power
    return total


@dataclass(frozen=True)
class LambdaSequence:
    """Frequencies ``lam_k = scale * base_k`` of a cosine product.

    ``kind`` selects the base sequence: ``geometric`` (``a**k``),
    ``factorial`` (``pi / k!``), ``harmonic`` (``1/k``) or ``custom``
    (finite list, sorted decreasingly on construction).
    """

    kind: str
    a: float = None
    values: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.kind == "geometric":
            if self.a is None or not 0.0 < self.a < 1.0:
                raise ValueError("geometric sequence needs 0 < a < 1")
        if self.kind == "custom":
            vals = tuple(sorted((float(v) for v in self.values), reverse=True))
            if not vals or vals[-1] <= 0.0 or not all(map(math.isfinite, vals)):
                raise ValueError("custom sequence needs finite positive values")
            object.__setattr__(self, "values", vals)
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")

    @classmethod
    def geometric(cls, a):
        return cls("geometric", a=float(a))

    @classmethod
    def factorial(cls):
        return cls("factorial")

    @classmethod
    def harmonic(cls):
        return cls("harmonic")

    @classmethod
    def custom(cls, values):
        return cls("custom", values=tuple(values))

    @property
    def length(self):
        return len(self.values) if self.kind == "custom" else math.inf

    def scaled(self, s):
        return LambdaSequence(self.kind, self.a, self.values, self.scale * s)

    def lam(self, k):
        """The k-th frequency (1-based); zero past the end of a custom list."""
        if k < 1:
            raise ValueError("index is 1-based")
        s = self.scale
        if self.kind == "geometric":
            return s * self.a ** k
        if self.kind == "factorial":
            return s * math.pi * math.exp(-math.lgamma(k + 1))
        if self.kind == "harmonic":
            return s / k
        return s * self.values[k - 1] if k <= len(self.values) else 0.0

    def lams(self, K):
        K = int(min(K, self.length))
        k = np.arange(1, K + 1, dtype=float)
        s = self.scale
        if self.kind == "geometric":
            return s * self.a ** k
        if self.kind == "factorial":
            return s * math.pi * np.exp(-special.gammaln(k + 1))
        if self.kind == "harmonic":
            return s / k
        return s * np.asarray(self.values[:K])

    def tail(self, N):
        """``R_N = sum_{k>N} lam_k`` (``inf`` for the harmonic sequence)."""
        s = self.scale
        if self.kind == "geometric":
            return s * self.a ** (N + 1) / (1.0 - self.a)
        if self.kind == "factorial":
            return s * math.pi * _factorial_tail(N)
        if self.kind == "harmonic":
            return math.inf
        return s * math.fsum(self.values[N:])

    def sq_tail(self, N):
        """``S_N = sum_{k>N} lam_k**2``."""
        s2 = self.scale ** 2
        if self.kind == "geometric":
            return s2 * self.a ** (2 * (N + 1)) / (1.0 - self.a ** 2)
        if self.kind == "factorial":
            return s2 * math.pi ** 2 * _factorial_tail(N, 2)
        if self.kind == "harmonic":
            return s2 * float(special.polygamma(1, N + 1))
        return s2 * math.fsum(v * v for v in self.values[N:])

    def fourth_power_sum(self):
        s4 = self.scale ** 4
        if self.kind == "geometric":
            return s4 * self.a ** 4 / (1.0 - self.a ** 4)
        if self.kind == "factorial":
            return s4 * math.pi ** 4 * _factorial_tail(0, 4)
        if self.kind == "harmonic":
            return s4 * math.pi ** 4 / 90.0
        return s4 * math.fsum(v ** 4 for v in self.values)

    def second_moment(self):
        """``E Y**2 = sum lam_k**2``."""
        return self.sq_tail(0)

    def fourth_moment(self):
        """``E Y**4 = 3 (sum lam**2)**2 - 2 sum lam**4``."""
        m2 = self.sq_tail(0)
        return 3.0 * m2 * m2 - 2.0 * self.fourth_power_sum()

    def support_bound(self, quantile=1e-6):
        """``sum lam_k`` when finite, else a sub-Gaussian ``1 - quantile`` bound."""
        r0 = self.tail(0)
        if math.isfinite(r0):
            return r0
        return math.sqrt(2.0 * self.sq_tail(0) * math.log(2.0 / quantile))

    def kernel_arrays(self, t_max, tol, order=0):
        """``(lams, sqtail)`` long enough for the cosine-product kernel on ``|t| <= t_max``."""
        t_max = max(float(t_max), 1e-300)

        def tail_bound(s):
            # worst case over |t| <= t_max of the kernel's truncation bound
            e = t_max ** 2 * s / 2.0
            if order >= 1:
                e += t_max * s * (2.0 if order == 2 else 1.0)
            if order == 2:
                e += s + t_max ** 2 * s * s
            return e

        if self.kind == "custom":
            K = len(self.values)
        else:
            K = 1
            while K < _KCAP:
                if self.lam(K + 1) * t_max < 1.0 and tail_bound(self.sq_tail(K)) <= tol:
                    break
                K = min(_KCAP, 2 * K)
        lams = self.lams(K)
        k = np.arange(K + 1)
        if self.kind == "geometric":
            sq = self.scale ** 2 * self.a ** (2 * (k + 1)) / (1.0 - self.a ** 2)
        elif self.kind == "harmonic":
            sq = self.scale ** 2 * special.polygamma(1, k + 1)
        else:
            # reverse cumulative sum from the exact tail beyond K
            sq = np.empty(K + 1)
            sq[K] = self.sq_tail(K)
            l2 = lams ** 2
            for j in range(K - 1, -1, -1):
                sq[j] = sq[j + 1] + l2[j]
        return lams, np.asarray(sq, float)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "geometric":
            d["a"] = self.a
        if self.kind == "custom":
            d["values"] = list(self.values)
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], a=d.get("a"), values=tuple(d.get("values", ())),
                   scale=float(d.get("scale", 1.0)))


def cosprod_values(lam, t, tol=1e-12, order=0):
    """Vectorised cosine product (``order`` 0, 1 or 2) with truncation bounds.

    Returns ``(values, n_used, error_bound)`` arrays.  Raises
    :class:`ToleranceError` when the bound exceeds ``tol`` at the largest
    admissible truncation.
    """
    t = np.atleast_1d(np.asarray(t, float))
    t_max = float(np.max(np.abs(t))) if t.size else 0.0
    lams, sq = lam.kernel_arrays(t_max, tol, order)
    vals, nused, err = kernels.cosprod(t, lams, sq, tol, order)
    if lam.kind != "custom" and np.any(err > tol):
        raise ToleranceError(f"cosine product truncation bound {err.max():.3g} exceeds tol={tol}")
    return vals, nused, err


def cosprod_eval(lam, t, tol=1e-12):
    """``prod_k cos(lam_k t)`` at a scalar ``t``; returns ``(value, N_used)``."""
    v, n, _ = cosprod_values(lam, [t], tol)
    return float(v[0]), int(n[0])


def vieta_check(t_grid, N=40):
    """Max deviation of ``prod_{k<=N} cos(2**-k t)`` from ``sin(t)/t`` on ``t_grid``."""
    t = np.asarray(t_grid, float)
    lams = 0.5 ** np.arange(1, N + 1)
    # a negative tolerance is never met, forcing exactly N factors
    prod, _, _ = kernels.cosprod(t, lams, np.zeros(N + 1), -1.0, 0)
    return float(np.max(np.abs(prod - np.sinc(t / np.pi))))


@dataclass(frozen=True)
class CantorVerdict:
    status: str  # "holds" | "fails" | "undetermined"
    n: int = None  # first failing (or undecidable) index
    margins: tuple = ()  # lam_n - R_n for the checked n

    @property
    def holds(self):
        return self.status == "holds"


def cantor_criterion(lam, n_max=50):
    """Check ``lam_n > R_n`` for ``n <= n_max``."""
    if n_max < 1:
        raise ValueError("n_max >= 1")
    if lam.kind == "geometric":
        # R_n / lam_n = a / (1 - a) for every n
        a = lam.a
        margins = tuple(lam.lam(n) - lam.tail(n) for n in range(1, n_max + 1))
        return CantorVerdict("holds" if a < 1.0 - a else "fails", None if a < 1.0 - a else 1, margins)
    if lam.kind == "harmonic":
        return CantorVerdict("fails", 1, (-math.inf,))
    if lam.kind == "factorial":
        # n! R_n / pi = 1/(n+1) + 1/((n+1)(n+2)) + ... < 1/n
        margins = []
        for n in range(1, n_max + 1):
            ratio, term, j = 0.0, 1.0, 1
            while term > 1e-18:
                term /= n + j
                ratio += term
                j += 1
            if not ratio < 1.0:
                return CantorVerdict("fails", n, tuple(margins))
            margins.append(lam.lam(n) * (1.0 - ratio))
        return CantorVerdict("holds", None, tuple(margins))
    margins = []
    for n in range(1, min(n_max, len(lam.values)) + 1):
        ln, rn = lam.lam(n), lam.tail(n)
        if abs(ln - rn) <= 1e-12 * ln:
            return CantorVerdict("undetermined", n, tuple(margins))
        if ln <= rn:
            return CantorVerdict("fails", n, tuple(margins))
        margins.append(ln - rn)
    return CantorVerdict("holds", None, tuple(margins))


@dataclass(frozen=True)
class FactorialRecurrence:
    n: int
    signed_value: float  # prefix_sign * C(n!)
    lower_bound: float  # prod_{k>n} (1 - pi**2/k**2)
    prefix_sign: int  # sign of prod_{k<=n} cos(pi n!/k!)
    alternating_sign: int  # (-1)**n
    direct_value: float  # plain floating evaluation of C(n!)


def tail_lower_bound(n, terms=200):
    """``prod_{k>n} (1 - pi**2/k**2)`` via ``-sum_j pi**(2j)/j * zeta(2j, n+1)``."""
    if n < 4:
        raise ValueError("n >= 4 required")
    q = math.pi ** 2 / (n + 1) ** 2
    total = 0.0
    for j in range(1, terms + 1):
        term = math.pi ** (2 * j) / j * float(special.zeta(2 * j, n + 1))
        total += term
        if term < 1e-18 * total or q ** j < 1e-20:
            break
    return math.exp(-total)


def factorial_recurrence(n):
    """Recurrence of the ``pi/k!`` cosine product at ``t = n!``."""
    if n < 4:
        raise ValueError("n >= 4 required")
    nf = math.factorial(n)
    parity = sum(nf // math.factorial(k) for k in range(1, n + 1)) % 2
    prefix_sign = -1 if parity else 1
    # tail factors cos(pi / ((n+1)(n+2)...k))
    tail = 1.0
    x = 1.0
    k = n
    while True:
        k += 1
        x /= k
        c = math.cos(math.pi * x)
        tail *= c
        if (math.pi * x) ** 2 < 1e-17:
            break
    direct, _ = cosprod_eval(LambdaSequence.factorial(), float(nf), tol=1e-12)
    # prefix_sign * C(n!) equals the tail product exactly
    return FactorialRecurrence(n, tail, tail_lower_bound(n),
                               prefix_sign, (-1) ** n, direct)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite symmetric law: sorted ``points`` with ``masses``."""

    points: np.ndarray
    masses: np.ndarray
    merge_tol: float = 0.0

    def total_mass(self):
        return float(np.sum(self.masses))

    def char_function(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        return np.cos(np.multiply.outer(t, self.points)) @ self.masses

    def min_gap(self):
        return float(np.min(np.diff(self.points))) if self.points.size > 1 else math.inf

    def coincidence_probability(self):
        """``P(Y = Y')`` for an independent copy: ``sum m_i**2``."""
        return float(np.dot(self.masses, self.masses))

    def difference_ball(self, r):
        """``P(|Y - Y'| < r)`` for an independent copy."""
        return kernels.ball_mass(self.points, self.masses, r)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("point,mass\n")
            for x, m in zip(self.points, self.masses):
                fh.write(f"{float(x)!r},{float(m)!r}\n")


def yn_distribution(lam, N, merge_tol=None, cap=DISTRIBUTION_CAP):
    """Exact law of ``Y_N = sum_{k<=N} lam_k eps_k``.

    Built by successive convolution with the two-point laws of
    ``lam_k eps_k``; atoms closer than ``merge_tol`` (default
    ``1e-13 * sum_{k<=N} lam_k``) are merged.
    """
    if N < 1:
        raise ValueError("N >= 1")
    if N > cap:
        raise ValueError(f"N={N} above distribution cap {cap}")
    lams = lam.lams(N)
    if lams.size < N:
        raise ValueError("sequence shorter than N")
    if merge_tol is None:
        merge_tol = 1e-13 * float(np.sum(lams))
    pts = np.zeros(1)
    ms = np.ones(1)
    for lk in lams:
        lo, hi = pts - lk, pts + lk
        # both halves are sorted; a stable merge keeps order deterministic
        allp = np.concatenate((lo, hi))
        allm = np.concatenate((ms, ms)) * 0.5
        order = np.argsort(allp, kind="stable")
        pts, ms = kernels.merge_sorted(allp[order], allm[order], merge_tol)
    return DiscreteDistribution(pts, ms, merge_tol)


def bracket_index(lam, T, n_cap=10_000):
    """The integer ``N >= 1`` with ``R_{N-1} >= 1/(4T) > R_N``."""
    target = 1.0 / (4.0 * T)
    if not lam.tail(0) >= target:
        raise ValueError("T too small: R_0 < 1/(4T)")
    N = 1
    while not lam.tail(N) < target:
        N += 1
        if N > min(n_cap, lam.length):
            raise ValueError("tail never drops below 1/(4T)")
    return N


@dataclass(frozen=True)
class SmallBall:
    T: float
    N: int
    radius: float  # 2 R_N
    exact_prob: float  # P(|Y_N - Y'_N| < 2 R_N), nan when flagged
    bound: float  # 2**-N
    separated: bool  # support gaps >= 2 R_N
    flagged: bool = False  # N above the distribution cap

    @property
    def bound_holds(self):
        return self.flagged or self.exact_prob >= self.bound * (1.0 - 1e-12)


def small_ball(lam, T, cap=DISTRIBUTION_CAP):
    """Small-ball probability at the bracketing index ``N_T``."""
    N = bracket_index(lam, T)
    rn = lam.tail(N)
    bound = 2.0 ** -N
    if N > cap:
        return SmallBall(T, N, 2 * rn, math.nan, bound, False, True)
    dist = yn_distribution(lam, N, cap=cap)
    separated = dist.min_gap() >= 2.0 * rn * (1.0 - 1e-12)
    res = SmallBall(T, N, 2 * rn, dist.difference_ball(2.0 * rn), bound, separated)
    if separated and not res.bound_holds:
        raise AssertionError("small-ball probability below 2**-N for separated support")
    return res


@dataclass
class GrowthCertificate:
    epsilon: float
    rows: list = field(default_factory=list)  # (T, N_T, L(T))
    increasing: bool = False
    crossover_epsilon: float = None

    def to_dict(self):
        return {"epsilon": self.epsilon, "increasing": self.increasing,
                "crossover_epsilon": self.crossover_epsilon,
                "table": [{"T": T, "N_T": n, "L": L} for T, n, L in self.rows]}


def quadratic_growth_certificate(lam, T_grid, epsilon):
    """Tabulate ``L(T) = T**epsilon * 2**-N_T`` over ``T_grid``.

    ``crossover_epsilon`` is the exponent above which ``L`` grows: zero for
    the factorial sequence (``N_T`` is sub-logarithmic), ``ln 2 / ln(1/a)``
    for geometric sequences, ``None`` otherwise.
    """
    if not 0.0 < epsilon < 2.0:
        raise ValueError("epsilon must lie in (0, 2)")
    rows = []
    for T in T_grid:
        N = bracket_index(lam, T)
        rows.append((float(T), N, float(T) ** epsilon * 2.0 ** -N))
    Ls = [r[2] for r in rows]
    inc = all(b > a for a, b in zip(Ls, Ls[1:]))
    cross = None
    if lam.kind == "factorial":
        cross = 0.0
    elif lam.kind == "geometric":
        cross = math.log(2.0) / math.log(1.0 / lam.a)
    return GrowthCertificate(float(epsilon), rows, inc, cross)
