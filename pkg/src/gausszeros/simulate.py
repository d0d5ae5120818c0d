"""Sample paths, zero sets and Monte Carlo variance experiments.

Three samplers produce a :class:`PathSample` on a uniform grid:

* ``sample_atomic``: exact trigonometric realisation for atomic measures;
* ``sample_circulant``: circulant embedding of the covariance on the grid;
* ``sample_spectral_mc``: random superposition of ``n_freq`` frequencies
  drawn from the normalized spectral measure.

Every replication of an experiment draws from its own Philox stream keyed
by ``(master_seed, T index, replication)``, so results do not depend on the
number of worker threads.
"""
import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from . import spectral as sp
from .covariance import CovarianceKernel
from .errors import EmbeddingError, SimulationError

METHODS = ("atomic_exact", "spectral_mc", "circulant")
DEFAULT_CEILING = 1e-6
BOOTSTRAP_RESAMPLES = 400


def stream(master_seed, *keys):
    """Independent Philox generator for ``(master_seed, *keys)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class PathSample:
    t0: float
    dt: float
    values: np.ndarray
    seed: int = None
    method: str = None
    method_params: dict = field(default_factory=dict)
    trig: tuple = None  # (freqs, a, b) when the path is an explicit trigonometric sum

    @property
    def n(self):
        return int(self.values.size)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.n)

    def dump(self, prefix):
        """Write ``prefix.bin`` (little-endian float64) and ``prefix.json``."""
        self.values.astype("<f8").tofile(prefix + ".bin")
        meta = {"t0": self.t0, "dt": self.dt, "n": self.n, "seed": self.seed,
                "method": self.method, "method_params": self.method_params}
        if self.trig is not None:
            meta["trig"] = [list(map(float, x)) for x in self.trig]
        with open(prefix + ".json", "w") as fh:
            json.dump(meta, fh, sort_keys=True)

    @classmethod
    def load(cls, prefix):
        with open(prefix + ".json") as fh:
            meta = json.load(fh)
        vals = np.fromfile(prefix + ".bin", dtype="<f8").astype(float)
        if vals.size != meta["n"]:
            raise ValueError("binary column length does not match sidecar")
        trig = tuple(np.asarray(x) for x in meta["trig"]) if "trig" in meta else None
        return cls(meta["t0"], meta["dt"], vals, meta["seed"], meta["method"],
                   meta["method_params"], trig)


@dataclass
class ZeroSet:
    zeros: np.ndarray
    widths: np.ndarray
    flags: list = field(default_factory=list)  # tangency warnings
    window: tuple = (-math.inf, math.inf)

    def __len__(self):
        return int(self.zeros.size)

    def count(self, lo=-math.inf, hi=math.inf):
        return int(np.count_nonzero((self.zeros >= lo) & (self.zeros <= hi)))


def _grid(lo, hi, dt):
    n = int(math.ceil((hi - lo) / dt - 1e-9)) + 1
    return lo, n


def sample_atomic(mu, t0, dt, n, rng, seed=None):
    """Exact path ``sum_i sqrt(m_i) (alpha_i cos(f_i t) + beta_i sin(f_i t))``."""
    if not isinstance(mu, sp.Atomic):
        raise TypeError("sample_atomic needs an Atomic measure")
    f = np.asarray(mu.freqs)
    amp = np.sqrt(np.asarray(mu.masses))
    g = rng.standard_normal((2, f.size))
    a, b = amp * g[0], amp * g[1]
    vals = kernels.trig_grid(t0, dt, n, f, a, b)
    return PathSample(float(t0), float(dt), vals, seed, "atomic_exact",
                      {"atoms": int(f.size), "c0": sp.total_mass(mu)}, (f, a, b))


def sample_spectral_mc(mu, n_freq, t0, dt, n, rng, seed=None):
    """Random spectral superposition with ``n_freq`` frequencies."""
    if n_freq < 1:
        raise ValueError("n_freq >= 1")
    c0 = sp.total_mass(mu)
    xi, info = sp.sample_frequencies(mu, rng, n_freq)
    g = rng.standard_normal((2, n_freq))
    s = math.sqrt(c0 / n_freq)
    a, b = s * g[0], s * g[1]
    vals = kernels.trig_grid(t0, dt, n, xi, a, b)
    params = {"n_freq": int(n_freq), "c0": c0}
    params.update(info)
    return PathSample(float(t0), float(dt), vals, seed, "spectral_mc", params, (xi, a, b))


class CirculantSampler:
    """Circulant embedding of ``C`` on ``n`` grid points of step ``dt``.

    The embedding size starts at the smallest power of two ``M0 >= 2(n-1)``
    and doubles up to ``max_factor * M0`` until no eigenvalue is negative.
    Each size is tried with the covariance itself on every lag and with a
    Hann roll-off beyond lag ``n - 1``; both agree on the sampled lags.  If
    none is exact, the candidate losing the least mass is kept and its
    negative eigenvalues are clipped.  A clipped fraction above ``ceiling`` raises
    :class:`EmbeddingError`.
    """

    def __init__(self, K, dt, n, ceiling=DEFAULT_CEILING, max_factor=8):
        self.dt = float(dt)
        self.n = int(n)
        self.c0 = K.eval(0.0, 0)
        if self.n == 1:
            self.M, self.sqrt_eig, self.clipped, self.extension = 1, None, 0.0, "plain"
            return
        m0 = 1 << int(math.ceil(math.log2(2 * (self.n - 1))))
        best = None
        M = m0
        while M <= max_factor * m0 and (best is None or best[1] > 0.0):
            k = np.arange(M // 2 + 1)
            c = K.eval(k * self.dt, 0)
            for ext in ("plain", "taper"):
                if ext == "taper":
                    # only lags below n are sampled; the padding is free, and a
                    # smooth roll-off removes most of the slow-tail ringing
                    width = M // 2 - (self.n - 1)
                    if width < 2:
                        continue
                    u = np.clip((k - (self.n - 1)) / width, 0.0, 1.0)
                    c = c * 0.5 * (1.0 + np.cos(np.pi * u))
                eig = self._eigenvalues(c)
                lost = self._lost(eig)
                if best is None or lost < best[1]:
                    best = (M, lost, eig, ext)
                if lost == 0.0:
                    break
            M *= 2
        self.M, self.clipped, eig, self.extension = best
        if self.clipped > ceiling:
            raise EmbeddingError(
                f"circulant embedding clips {self.clipped:.3g} of spectral mass "
                f"(ceiling {ceiling:.3g}); use a smaller dt or a larger padding factor")
        self.sqrt_eig = np.sqrt(np.maximum(eig, 0.0))

    @staticmethod
    def _eigenvalues(c):
        return np.fft.rfft(np.concatenate((c, c[-2:0:-1]))).real

    @staticmethod
    def _lost(eig):
        # rounding-level negatives are not embedding defects
        neg = eig < -1e-10 * max(eig.max(), 0.0)
        w = np.full(eig.size, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return float(np.sum(w[neg] * -eig[neg]) / np.sum(w * np.abs(eig)))

    @property
    def params(self):
        return {"embedding_size": self.M, "extension": self.extension,
                "clipped_fraction": self.clipped, "c0": self.c0}

    def sample(self, t0, rng, seed=None):
        if self.n == 1:
            vals = np.array([math.sqrt(self.c0) * rng.standard_normal()])
        else:
            # symmetric square root of the circulant applied to white noise
            z = rng.standard_normal(self.M)
            y = np.fft.irfft(self.sqrt_eig * np.fft.rfft(z), n=self.M)
            vals = y[:self.n]
        return PathSample(float(t0), self.dt, np.ascontiguousarray(vals), seed, "circulant",
                          dict(self.params))


def sample_circulant(K, t0, dt, n, rng, seed=None, ceiling=DEFAULT_CEILING):
    return CirculantSampler(K, dt, n, ceiling).sample(t0, rng, seed)


def count_zeros(path, refine_tol=1e-10, tangent_tol=None):
    """Zeros of a sampled path.

    Sign changes between consecutive grid values are refined by bisection,
    on the exact trigonometric sum when the path carries one and on the
    local cubic interpolant otherwise.  Grid values that vanish between
    opposite signs are zeros with zero bracket width.  Near-zero local
    minima of ``|X|`` without a sign change are reported in ``flags`` and
    not counted.
    """
    if not refine_tol < path.dt:
        raise ValueError("refine_tol must be smaller than dt")
    if tangent_tol is None:
        tangent_tol = 1e-6 * math.sqrt(path.method_params.get("c0", 1.0))
    v = path.values
    cross, exact, tang = kernels.classify_grid(v, tangent_tol)
    n_iter = max(1, int(math.ceil(math.log2(path.dt / refine_tol))))
    if path.trig is not None:
        lo = path.t0 + cross * path.dt
        roots, widths = kernels.bisect_trig(lo, lo + path.dt, *path.trig, n_iter)
    else:
        roots, widths = kernels.bisect_grid(v, cross, path.t0, path.dt, n_iter)
    ez = path.t0 + exact * path.dt
    z = np.concatenate((roots, ez))
    w = np.concatenate((widths, np.zeros(ez.size)))
    order = np.argsort(z, kind="stable")
    flags = [{"t": float(path.t0 + i * path.dt), "value": float(v[i])} for i in tang]
    window = (path.t0, path.t0 + (path.n - 1) * path.dt)
    return ZeroSet(z[order], w[order], flags, window)


class LinearStatistic:
    """Compactly supported test function ``phi``; ``scaled(T)`` gives ``phi(./T)``."""

    support = (0.0, 0.0)

    def __call__(self, x):
        raise NotImplementedError

    def integral(self):
        raise NotImplementedError

    def fourier(self, xi):
        """``int phi(t) e^{i xi t} dt``."""
        raise NotImplementedError

    def fourier_abs2(self, xi):
        return np.abs(self.fourier(xi)) ** 2

    def autocorrelation(self, z):
        """``int phi(s + z) phi(s) ds``; its Fourier transform is ``|phi_hat|**2``."""
        raise NotImplementedError

    def convolution_square(self, z):
        """``int phi(s) phi(z - s) ds``."""
        raise NotImplementedError

    def breakpoints(self):
        return list(self.support)


def _overlap(p, q, r, s):
    return np.maximum(0.0, np.minimum(q, s) - np.maximum(p, r))


class PiecewiseConstant(LinearStatistic):
    """``levels[i]`` on ``(edges[i], edges[i+1]]``, the first piece closed."""

    def __init__(self, edges, levels):
        e = np.asarray(edges, float)
        lv = np.asarray(levels, float)
        if e.ndim != 1 or e.size != lv.size + 1 or np.any(np.diff(e) <= 0.0):
            raise ValueError("need increasing edges, one more than levels")
        self.edges, self.levels = e, lv
        self.support = (float(e[0]), float(e[-1]))

    def scaled(self, T):
        return PiecewiseConstant(self.edges * T, self.levels)

    def __call__(self, x):
        x = np.asarray(x, float)
        j = np.searchsorted(self.edges, x, side="left") - 1
        j = np.where(x == self.edges[0], 0, j)
        inside = (j >= 0) & (j < self.levels.size)
        return np.where(inside, self.levels[np.clip(j, 0, self.levels.size - 1)], 0.0)

    def integral(self):
        return float(np.dot(self.levels, np.diff(self.edges)))

    def integral_sq(self):
        return float(np.dot(self.levels ** 2, np.diff(self.edges)))

    def fourier(self, xi):
        xi = np.atleast_1d(np.asarray(xi, float))
        a, b = self.edges[:-1], self.edges[1:]
        c, w = 0.5 * (a + b), 0.5 * (b - a)
        xw = np.multiply.outer(xi, w)
        return (np.exp(1j * np.multiply.outer(xi, c)) * 2.0 * w * np.sinc(xw / np.pi)) @ self.levels

    def _pair_sum(self, z, conv):
        z = np.atleast_1d(np.asarray(z, float))
        a, b, l = self.edges[:-1], self.edges[1:], self.levels
        out = np.zeros_like(z)
        for i in range(l.size):
            for j in range(l.size):
                if conv:
                    out += l[i] * l[j] * _overlap(a[i], b[i], z - b[j], z - a[j])
                else:
                    out += l[i] * l[j] * _overlap(a[i] - z, b[i] - z, a[j], b[j])
        return out

    def autocorrelation(self, z):
        return self._pair_sum(z, False)

    def convolution_square(self, z):
        return self._pair_sum(z, True)

    def breakpoints(self):
        return list(self.edges)

    def lag_breakpoints(self):
        e = self.edges
        return sorted(set(np.subtract.outer(e, e).ravel().tolist()))


class Indicator(PiecewiseConstant):
    """``1_[a, b]``."""

    def __init__(self, a, b):
        super().__init__([a, b], [1.0])
        self.a, self.b = float(a), float(b)

    def scaled(self, T):
        return Indicator(self.a * T, self.b * T)

    def fourier_abs2(self, xi):
        xi = np.asarray(xi, float)
        w = 0.5 * (self.b - self.a)
        return (2.0 * w * np.sinc(xi * w / np.pi)) ** 2

    def autocorrelation(self, z):
        # (length - |z|)^+, i.e. (2T - |z|)^+ for 1_[-T, T]
        return np.maximum(0.0, (self.b - self.a) - np.abs(np.asarray(z, float)))

    def convolution_square(self, z):
        z = np.asarray(z, float)
        return np.maximum(0.0, (self.b - self.a) - np.abs(z - (self.a + self.b)))


class Tabulated(LinearStatistic):
    """Continuous piecewise-linear ``phi``, zero outside ``[grid[0], grid[-1]]``."""

    def __init__(self, grid, values, resolution=1 << 14):
        g = np.asarray(grid, float)
        v = np.asarray(values, float)
        if g.ndim != 1 or g.size < 2 or g.shape != v.shape or np.any(np.diff(g) <= 0.0):
            raise ValueError("need an increasing grid and matching values")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("tabulated test functions must vanish at the ends of the grid")
        self.grid, self.values = g, v
        self.support = (float(g[0]), float(g[-1]))
        self.resolution = int(resolution)
        self._corr = None

    def scaled(self, T):
        return Tabulated(self.grid * T, self.values, self.resolution)

    def __call__(self, x):
        return np.interp(np.asarray(x, float), self.grid, self.values, left=0.0, right=0.0)

    def integral(self):
        return float(np.sum(0.5 * np.diff(self.grid) * (self.values[:-1] + self.values[1:])))

    def fourier(self, xi):
        xi = np.atleast_1d(np.asarray(xi, float))
        x0, x1 = self.grid[:-1], self.grid[1:]
        y0, y1 = self.values[:-1], self.values[1:]
        h = x1 - x0
        out = np.empty(xi.size, complex)
        nodes, w = np.polynomial.legendre.leggauss(8)
        for i, s in enumerate(xi):
            theta = s * h
            small = np.abs(theta) <= 4.0
            xs = x0[:, None] + 0.5 * h[:, None] * (nodes[None, :] + 1.0)
            fx = y0[:, None] + (y1 - y0)[:, None] * (xs - x0[:, None]) / h[:, None]
            gl = np.sum(0.5 * h[:, None] * w[None, :] * fx * np.exp(1j * s * xs), axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                # exact integral of a linear function times e^{isx}
                e0, e1 = np.exp(1j * s * x0), np.exp(1j * s * x1)
                slope = (y1 - y0) / h
                ex = (y1 * e1 - y0 * e0) / (1j * s) - slope * (e1 - e0) / (1j * s) ** 2
            out[i] = np.sum(np.where(small, gl, ex))
        return out

    def _table(self):
        if self._corr is None:
            lo, hi = self.support
            h = (hi - lo) / self.resolution
            x = lo + h * np.arange(self.resolution + 1)
            f = self(x)
            # trapezoid correlation on the uniform grid; f vanishes at both ends
            corr = np.correlate(f, f, mode="full") * h
            self._corr = (h, corr)
        return self._corr

    def autocorrelation(self, z):
        h, corr = self._table()
        m = self.resolution
        lag = np.arange(-m, m + 1) * h
        return np.interp(np.asarray(z, float), lag, corr, left=0.0, right=0.0)

    def convolution_square(self, z):
        h, corr = self._table()
        lo, hi = self.support
        m = self.resolution
        x = lo + h * np.arange(m + 1)
        f = self(x)
        conv = np.convolve(f, f) * h
        lag = 2 * lo + h * np.arange(2 * m + 1)
        return np.interp(np.asarray(z, float), lag, conv, left=0.0, right=0.0)

    def quadrature_error(self):
        """Crude bound on the trapezoid correlation error (second-order in the step)."""
        h = (self.support[1] - self.support[0]) / self.resolution
        slope = np.max(np.abs(np.diff(self.values) / np.diff(self.grid)))
        return float(slope * slope * h * h * (self.support[1] - self.support[0]))


def linear_statistic(zeros, phi, T=1.0):
    """``sum_z phi(z / T)`` over the zero set."""
    phiT = phi.scaled(T)
    lo, hi = phiT.support
    if lo < zeros.window[0] - 1e-12 or hi > zeros.window[1] + 1e-12:
        raise ValueError(f"zero set window {zeros.window} does not contain [{lo}, {hi}]")
    return float(np.sum(phiT(zeros.zeros)))


@dataclass
class VarianceRow:
    T: float
    n_reps: int
    mean_count: float
    var_count: float
    ci_low: float
    ci_high: float
    var_over_T: float
    var_over_T2: float
    mean_se: float
    var_se: float


CSV_COLUMNS = ("T", "n_reps", "mean_count", "var_count", "ci_low", "ci_high",
               "var_over_T", "var_over_T2", "method", "seed", "mean_se", "var_se")


@dataclass
class VarianceReport:
    rows: list
    master_seed: int
    method: str
    method_params: dict = field(default_factory=dict)
    counts: list = field(default_factory=list)  # per-T replication values

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(r.T)), r.n_reps, repr(r.mean_count), repr(r.var_count),
                        repr(r.ci_low), repr(r.ci_high), repr(r.var_over_T), repr(r.var_over_T2),
                        self.method, self.master_seed, repr(r.mean_se), repr(r.var_se)])
        return buf.getvalue()


def default_dt(mu):
    """``min(0.05, (2 pi / x_max) / 16)``."""
    xmax = sp.support_bound(mu)
    if xmax <= 0.0:
        return 0.05
    return min(0.05, 2.0 * math.pi / xmax / 16.0)


def summarize(values, T, rng, resamples=BOOTSTRAP_RESAMPLES):
    x = np.asarray(values, float)
    n = x.size
    mean = float(np.mean(x))
    if n < 2:
        nan = math.nan
        return VarianceRow(T, n, mean, nan, nan, nan, nan, nan, nan, nan)
    var = float(np.var(x, ddof=1))
    d = x - mean
    m4 = float(np.mean(d ** 4))
    var_se = math.sqrt(max(m4 - (n - 3) / (n - 1) * var * var, 0.0) / n)
    idx = rng.integers(0, n, size=(resamples, n))
    boot = np.var(x[idx], axis=1, ddof=1)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return VarianceRow(float(T), n, mean, var, float(lo), float(hi), var / T, var / T ** 2,
                       math.sqrt(var / n), var_se)


def variance_experiment(mu, phi, T_list, n_reps, method, master_seed, dt=None, threads=None,
                        n_freq=64, refine_tol=1e-10, circulant_ceiling=DEFAULT_CEILING,
                        kernel_tol=1e-12, resamples=BOOTSTRAP_RESAMPLES):
    """Monte Carlo statistics of ``N_X(phi_T)`` for each ``T`` in ``T_list``.

    Replication ``r`` at the ``i``-th window uses ``stream(master_seed, 0, i, r)``;
    the bootstrap for window ``i`` uses ``stream(master_seed, 1, i)``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "atomic_exact" and not isinstance(mu, sp.Atomic):
        raise ValueError("atomic_exact needs an Atomic measure")
    T_list = [float(T) for T in T_list]
    if dt is None:
        dt = default_dt(mu)
    threads = threads or os.cpu_count() or 1
    K = CovarianceKernel(mu, kernel_tol) if method == "circulant" else None
    rows, all_counts = [], []
    params = {"dt": dt, "n_freq": n_freq if method == "spectral_mc" else None}
    clipped = []
    for i, T in enumerate(T_list):
        phiT = phi.scaled(T)
        lo, hi = phiT.support
        t0, n = _grid(lo - 4 * dt, hi + 4 * dt, dt)
        sampler = CirculantSampler(K, dt, n, circulant_ceiling) if K is not None else None
        if sampler is not None:
            clipped.append(sampler.clipped)

        def one(r, i=i, T=T, t0=t0, n=n, sampler=sampler):
            try:
                rng = stream(master_seed, 0, i, r)
                if method == "atomic_exact":
                    path = sample_atomic(mu, t0, dt, n, rng)
                elif method == "spectral_mc":
                    path = sample_spectral_mc(mu, n_freq, t0, dt, n, rng)
                else:
                    path = sampler.sample(t0, rng)
                z = count_zeros(path, refine_tol)
                return linear_statistic(z, phi, T)
            except Exception as exc:
                raise SimulationError(f"replication {r} at T={T} failed: {exc}", r) from exc

        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                counts = list(ex.map(one, range(n_reps)))
        else:
            counts = [one(r) for r in range(n_reps)]
        all_counts.append(np.asarray(counts))
        rows.append(summarize(counts, T, stream(master_seed, 1, i), resamples))
    if clipped:
        params["clipped_fraction"] = max(clipped)
    return VarianceReport(rows, int(master_seed), method, params, all_counts)


@dataclass
class PredictabilityReport:
    interval: tuple
    shifts: list
    agreement: list
    covariance: list
    occupancy: float
    n_reps: int


def _occupied(values):
    cross, exact, _ = kernels.classify_grid(values, 0.0)
    return cross.size > 0 or exact.size > 0


def predictability_experiment(mu, interval, shifts, n_reps, seed, dt=None):
    """Agreement of ``{Z meets I}`` with ``{Z meets I - t}`` for each shift ``t``."""
    if not isinstance(mu, sp.Atomic):
        raise TypeError("predictability needs an Atomic measure")
    a, b = map(float, interval)
    if not b > a:
        raise ValueError("empty interval")
    dt = default_dt(mu) if dt is None else dt
    _, n = _grid(a, b, dt)
    f = np.asarray(mu.freqs)
    amp = np.sqrt(np.asarray(mu.masses))
    K = CovarianceKernel(mu)
    agree = np.zeros(len(shifts))
    occ = 0
    for r in range(n_reps):
        rng = stream(seed, 2, r)
        g = rng.standard_normal((2, f.size))
        ca, cb = amp * g[0], amp * g[1]
        base = _occupied(kernels.trig_grid(a, dt, n, f, ca, cb))
        occ += base
        for j, t in enumerate(shifts):
            agree[j] += base == _occupied(kernels.trig_grid(a - t, dt, n, f, ca, cb))
    return PredictabilityReport((a, b), [float(t) for t in shifts], list(agree / n_reps),
                                [K.eval(float(t), 0) for t in shifts], occ / n_reps, n_reps)
