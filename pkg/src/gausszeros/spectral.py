"""Symmetric spectral measures.

Four immutable variants cover the measures used throughout the package:

``Atomic``
    pairs ``(frequency, mass)`` with ``frequency >= 0``, standing for
    ``mass/2 * (delta_{+f} + delta_{-f})`` (the full mass sits at 0 when
    ``f == 0``).
``Density``
    an even density, either builtin (``uniform`` on ``[-w, w]`` or centred
    ``gaussian`` with standard deviation ``w``) or tabulated on a
    nonnegative grid with piecewise-linear interpolation.  Repeated grid
    nodes encode jumps.
``CosineProduct``
    the law of ``sum_k lam_k eps_k`` for a :class:`LambdaSequence`, times
    ``mass``.
``Mixture``
    a finite weighted sum of the above.

Symmetry holds by construction: only nonnegative representatives are ever
stored.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .bernoulli import LambdaSequence, yn_distribution
from .errors import DegenerateMeasureError, QuadratureError, UnknownStructureError

MERGE_TOL = 1e-12
_BUILTINS = ("uniform", "gaussian")
_GL3 = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True)
class NormalizationRecord:
    """``nu(A) = mass_scale * mu(A / frequency_scale)``."""

    mass_scale: float
    frequency_scale: float


def _merge_atoms(freqs, masses):
    order = np.argsort(freqs, kind="stable")
    f = np.asarray(freqs, float)[order]
    m = np.asarray(masses, float)[order]
    out_f, out_m = [], []
    for x, w in zip(f, m):
        if out_f and x - out_f[-1][0] <= MERGE_TOL:
            out_f[-1].append(x)
            out_m[-1] += w
        else:
            out_f.append([x])
            out_m.append(w)
    return tuple(float(g[0]) for g in out_f), tuple(float(w) for w in out_m)


@dataclass(frozen=True)
class Atomic:
    freqs: tuple
    masses: tuple

    def __post_init__(self):
        f = tuple(float(x) for x in self.freqs)
        m = tuple(float(x) for x in self.masses)
        if len(f) != len(m) or not f:
            raise ValueError("need equally many (>= 1) frequencies and masses")
        if not all(math.isfinite(x) and x >= 0.0 for x in f):
            raise ValueError("frequencies must be finite and >= 0")
        if not all(math.isfinite(x) and x > 0.0 for x in m):
            raise ValueError("masses must be finite and > 0")
        f, m = _merge_atoms(f, m)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "masses", m)

    @classmethod
    def of(cls, pairs):
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def pairs(self):
        return list(zip(self.freqs, self.masses))


@dataclass(frozen=True)
class Density:
    """Even density; see the module docstring for the three kinds."""

    kind: str
    width: float = 1.0
    mass: float = 1.0
    grid: tuple = None
    values: tuple = None

    def __post_init__(self):
        if self.kind in _BUILTINS:
            if not (self.width > 0.0 and math.isfinite(self.width)):
                raise ValueError("width must be positive")
            if not (self.mass > 0.0 and math.isfinite(self.mass)):
                raise ValueError("mass must be positive")
            return
        if self.kind != "tabulated":
            raise ValueError(f"unknown density kind {self.kind!r}")
        g = np.asarray(self.grid, float)
        v = np.asarray(self.values, float)
        if g.ndim != 1 or g.size < 2 or g.shape != v.shape:
            raise ValueError("grid and values must be 1-d of equal length >= 2")
        if not np.all(np.isfinite(g)) or g[0] < 0.0 or np.any(np.diff(g) < 0.0):
            raise ValueError("grid must be finite, nonnegative and nondecreasing")
        if not np.all(np.isfinite(v)):
            seg = 0.5 * np.diff(g) * (v[:-1] + v[1:])
            raise QuadratureError("tabulated density is not finite", list(np.cumsum(2.0 * seg)))
        if np.any(v < 0.0):
            raise ValueError("density values must be >= 0")
        object.__setattr__(self, "grid", tuple(g))
        object.__setattr__(self, "values", tuple(v))
        m = float(np.sum(np.diff(g) * (v[:-1] + v[1:])))
        if not m > 0.0:
            raise DegenerateMeasureError("tabulated density has zero mass")
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "width", float(g[-1]))

    @classmethod
    def uniform(cls, half_width, mass=1.0):
        return cls("uniform", float(half_width), float(mass))

    @classmethod
    def gaussian(cls, sigma, mass=1.0):
        return cls("gaussian", float(sigma), float(mass))

    @classmethod
    def tabulated(cls, grid, values):
        return cls("tabulated", grid=tuple(grid), values=tuple(values))

    def segments(self):
        """``(x0, x1, y0, y1)`` arrays of the non-empty linear pieces."""
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        keep = np.diff(g) > 0.0
        return g[:-1][keep], g[1:][keep], v[:-1][keep], v[1:][keep]

    def pdf(self, x):
        x = np.abs(np.asarray(x, float))
        if self.kind == "uniform":
            return np.where(x <= self.width, self.mass / (2.0 * self.width), 0.0)
        if self.kind == "gaussian":
            s = self.width
            return self.mass * np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
        x0, x1, y0, y1 = self.segments()
        out = np.zeros_like(x)
        j = np.searchsorted(x1, x, side="left")
        inside = (j < x0.size) & (x >= (x0[0] if x0.size else np.inf))
        jj = np.minimum(j, x0.size - 1)
        s = (x - x0[jj]) / (x1[jj] - x0[jj])
        val = y0[jj] + s * (y1[jj] - y0[jj])
        return np.where(inside & (x >= x0[jj]), val, out)

    def abs_moment(self, k):
        """``int |x|**k f(x) dx`` over the real line."""
        if self.kind == "uniform":
            return self.mass * self.width ** k / (k + 1)
        if self.kind == "gaussian":
            return self.mass * self.width ** k * float(special.factorial2(k - 1)) if k % 2 == 0 \
                else self.mass * self.width ** k * 2 ** (k / 2) * math.gamma((k + 1) / 2) / math.sqrt(math.pi)
        x0, x1, y0, y1 = self.segments()
        nodes, w = _GL3
        h = (x1 - x0)[:, None]
        xs = x0[:, None] + 0.5 * h * (nodes[None, :] + 1.0)
        fs = y0[:, None] + (y1 - y0)[:, None] * (xs - x0[:, None]) / h
        return float(2.0 * np.sum(0.5 * h * w[None, :] * fs * xs ** k))


@dataclass(frozen=True)
class CosineProduct:
    sequence: LambdaSequence
    mass: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class Mixture:
    weights: tuple
    components: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        c = tuple(self.components)
        if len(w) != len(c) or not c:
            raise ValueError("need equally many (>= 1) weights and components")
        if not all(math.isfinite(x) and x > 0.0 for x in w):
            raise ValueError("weights must be finite and > 0")
        for comp in c:
            if not isinstance(comp, (Atomic, Density, CosineProduct, Mixture)):
                raise TypeError(f"not a spectral measure: {comp!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", c)


VARIANTS = (Atomic, Density, CosineProduct, Mixture)


def total_mass(mu):
    """``mu(R) = C(0)``."""
    if isinstance(mu, Atomic):
        return math.fsum(mu.masses)
    if isinstance(mu, (Density, CosineProduct)):
        return mu.mass
    return math.fsum(w * total_mass(c) for w, c in zip(mu.weights, mu.components))


def moment(mu, k):
    """``int x**k mu(dx)`` for even ``k`` (2 and 4 are used)."""
    if k % 2:
        raise ValueError("odd moments of a symmetric measure vanish")
    if isinstance(mu, Atomic):
        return math.fsum(m * f ** k for f, m in zip(mu.freqs, mu.masses))
    if isinstance(mu, Density):
        return mu.abs_moment(k)
    if isinstance(mu, CosineProduct):
        if k == 2:
            return mu.mass * mu.sequence.second_moment()
        if k == 4:
            return mu.mass * mu.sequence.fourth_moment()
        raise ValueError("only moments 2 and 4 are available for cosine products")
    return math.fsum(w * moment(c, k) for w, c in zip(mu.weights, mu.components))


def second_moment(mu):
    """``int x**2 mu(dx) = -C''(0)``."""
    return moment(mu, 2)


def fourth_moment(mu):
    return moment(mu, 4)


def scale(mu, mass_scale, frequency_scale):
    """Image measure ``A -> mass_scale * mu(A / frequency_scale)``."""
    k, s = float(mass_scale), float(frequency_scale)
    if isinstance(mu, Atomic):
        return Atomic(tuple(f * s for f in mu.freqs), tuple(m * k for m in mu.masses))
    if isinstance(mu, Density):
        if mu.kind in _BUILTINS:
            return Density(mu.kind, mu.width * s, mu.mass * k)
        return Density.tabulated(tuple(x * s for x in mu.grid), tuple(v * k / s for v in mu.values))
    if isinstance(mu, CosineProduct):
        return CosineProduct(mu.sequence.scaled(s), mu.mass * k)
    return Mixture(mu.weights, tuple(scale(c, k, s) for c in mu.components))


def normalize(mu):
    """Rescale to ``C(0) = 1`` and ``-C''(0) = 1``.

    Returns ``(nu, record)``.  Measures already normalized to within 1e-14
    come back unchanged with the record ``(1, 1)``.
    """
    m0 = total_mass(mu)
    m2 = second_moment(mu)
    if not (m0 > 0.0 and math.isfinite(m0)):
        raise DegenerateMeasureError(f"total mass {m0} is not positive")
    if not (m2 > 0.0 and math.isfinite(m2)):
        raise DegenerateMeasureError(f"second moment {m2} is not positive")
    k = 1.0 / m0
    s = math.sqrt(m0 / m2)
    if abs(k - 1.0) < 1e-14 and abs(s - 1.0) < 1e-14:
        return mu, NormalizationRecord(1.0, 1.0)
    return scale(mu, k, s), NormalizationRecord(k, s)


def apply_record(mu, record):
    return scale(mu, record.mass_scale, record.frequency_scale)


def _flat_atoms(mu, w=1.0):
    """Weighted atoms of ``mu``; ``None`` where a component has a continuous part."""
    if isinstance(mu, Atomic):
        return [(f, w * m) for f, m in mu.pairs]
    if isinstance(mu, Mixture):
        out = []
        for wc, c in zip(mu.weights, mu.components):
            sub = _flat_atoms(c, w * wc)
            if sub is None:
                return None
            out.extend(sub)
        return out
    if isinstance(mu, CosineProduct) and mu.sequence.kind == "custom":
        return [(f, w * m) for f, m in _custom_atoms(mu)]
    return None


def _custom_atoms(mu):
    lam = mu.sequence
    d = yn_distribution(lam, len(lam.values))
    pos = d.points >= -MERGE_TOL
    pts = np.abs(d.points[pos])
    ms = np.where(pts <= MERGE_TOL, d.masses[pos], 2.0 * d.masses[pos]) * mu.mass
    return list(zip(pts, ms))


def is_degenerate(mu):
    """True iff ``mu`` is a single symmetric atom pair (or one atom at 0)."""
    atoms = _flat_atoms(mu)
    if atoms is None:
        return False
    f, _ = _merge_atoms([a[0] for a in atoms], [a[1] for a in atoms])
    return len(f) == 1


def atom_list(mu):
    """Atoms ``(frequency >= 0, pair mass)`` of ``mu``.

    Density parts contribute nothing.  Infinite cosine products are
    atomless: each term puts mass at most 1/2 on any point and the product
    of these maxima vanishes (Levy's continuity criterion), which in
    particular covers every sequence passing the Cantor criterion.
    """
    if isinstance(mu, Atomic):
        return mu.pairs
    if isinstance(mu, Density):
        return []
    if isinstance(mu, CosineProduct):
        if mu.sequence.kind == "custom":
            return _custom_atoms(mu)
        return []
    out = []
    for w, c in zip(mu.weights, mu.components):
        out.extend((f, w * m) for f, m in atom_list(c))
    if not out:
        return []
    f, m = _merge_atoms([a[0] for a in out], [a[1] for a in out])
    return list(zip(f, m))


def regular_at(mu, x, half_width):
    """Whether ``mu`` has an L2 density on ``(x - half_width, x + half_width)``."""
    if not half_width > 0.0:
        raise ValueError("half_width must be positive")
    lo, hi = x - half_width, x + half_width
    if isinstance(mu, Density):
        return True
    if isinstance(mu, CosineProduct) and mu.sequence.kind != "custom":
        raise UnknownStructureError("local regularity of a Bernoulli convolution is not decidable here")
    if isinstance(mu, Mixture):
        return all(regular_at(c, x, half_width) for c in mu.components)
    for f, _ in atom_list(mu):
        if lo < f < hi or lo < -f < hi:
            return False
    return True


def support_bound(mu, quantile=1e-6):
    """``x_max`` with ``mu(|x| > x_max) <= quantile * mu(R)``."""
    if isinstance(mu, Atomic):
        return max(mu.freqs)
    if isinstance(mu, Density):
        if mu.kind == "uniform":
            return mu.width
        if mu.kind == "gaussian":
            return mu.width * math.sqrt(2.0) * float(special.erfcinv(quantile))
        g, v = np.asarray(mu.grid), np.asarray(mu.values)
        pos = np.flatnonzero(v > 0.0)
        return float(g[min(pos[-1] + 1, g.size - 1)])
    if isinstance(mu, CosineProduct):
        return mu.sequence.support_bound(quantile)
    return max(support_bound(c, quantile) for c in mu.components)


def restrict(mu, lo, hi=math.inf, resolution=4096):
    """``mu`` restricted to ``{lo <= |x| <= hi}``.

    Atoms and tabulated or uniform densities restrict exactly; a Gaussian is
    tabulated on ``resolution`` linear pieces first (relative error of
    order ``resolution**-2``).  Returns ``None`` for a null restriction.
    """
    if isinstance(mu, Atomic):
        keep = [(f, m) for f, m in mu.pairs if lo <= f <= hi]
        return Atomic.of(keep) if keep else None
    if isinstance(mu, Mixture):
        parts = [(w, restrict(c, lo, hi, resolution)) for w, c in zip(mu.weights, mu.components)]
        parts = [(w, c) for w, c in parts if c is not None]
        if not parts:
            return None
        return Mixture(tuple(p[0] for p in parts), tuple(p[1] for p in parts))
    if isinstance(mu, CosineProduct):
        raise UnknownStructureError("cannot restrict a Bernoulli convolution")
    if mu.kind == "uniform":
        top = min(hi, mu.width)
        if top <= lo:
            return None
        c = mu.mass / (2.0 * mu.width)
        return Density.tabulated((lo, top), (c, c))
    if mu.kind == "gaussian":
        top = min(hi, support_bound(mu, 1e-16))
        g = np.linspace(0.0, top, resolution + 1)
        mu = Density.tabulated(g, mu.pdf(g))
    g = np.asarray(mu.grid)
    a, b = max(lo, g[0]), min(hi, g[-1])
    if b <= a:
        return None
    inner = g[(g > a) & (g < b)]
    ng = np.concatenate(([a], inner, [b]))
    nv = np.asarray(mu.pdf(ng))
    # keep jump structure at repeated interior nodes
    gv = np.asarray(mu.values)
    reps = np.flatnonzero(np.diff(g) == 0.0)
    grid, vals = list(ng), list(nv)
    for r in reps:
        if a < g[r] < b:
            i = grid.index(g[r])
            vals[i] = gv[r]
            grid.insert(i + 1, g[r])
            vals.insert(i + 1, gv[r + 1])
    try:
        return Density.tabulated(grid, vals)
    except DegenerateMeasureError:
        return None


def sample_frequencies(mu, rng, n, tol=1e-10):
    """``n`` i.i.d. draws of ``|xi|`` with ``xi ~ mu / mu(R)``.

    Returns ``(freqs, info)`` where ``info`` records the truncation used for
    cosine products.
    """
    info = {}
    if isinstance(mu, Atomic):
        p = np.asarray(mu.masses) / total_mass(mu)
        return np.asarray(mu.freqs)[rng.choice(p.size, size=n, p=p)], info
    if isinstance(mu, Density):
        if mu.kind == "uniform":
            return mu.width * rng.random(n), info
        if mu.kind == "gaussian":
            return np.abs(mu.width * rng.standard_normal(n)), info
        x0, x1, y0, y1 = mu.segments()
        h = x1 - x0
        w = 0.5 * h * (y0 + y1)
        cw = np.cumsum(w)
        u = rng.random(n) * cw[-1]
        j = np.minimum(np.searchsorted(cw, u, side="right"), cw.size - 1)
        r = u - (cw[j] - w[j])
        slope = (y1[j] - y0[j]) / h[j]
        disc = np.sqrt(np.maximum(y0[j] ** 2 + 2.0 * slope * r, 0.0))
        denom = y0[j] + disc
        s = np.where(denom > 0.0, 2.0 * r / np.where(denom > 0.0, denom, 1.0), 0.0)
        return x0[j] + np.clip(s, 0.0, h[j]), info
    if isinstance(mu, CosineProduct):
        lam = mu.sequence
        K = 1
        cap = 1 << 16
        while K < min(cap, lam.length):
            r = lam.tail(K)
            if (math.isfinite(r) and r < tol) or math.sqrt(lam.sq_tail(K)) < tol:
                break
            K *= 2
        K = int(min(K, lam.length))
        lams = lam.lams(K)
        y = np.zeros(n)
        for lk in lams:
            y += lk * (2.0 * rng.integers(0, 2, size=n) - 1.0)
        info = {"terms": K, "tail_sd": math.sqrt(lam.sq_tail(K))}
        return np.abs(y), info
    p = np.array([w * total_mass(c) for w, c in zip(mu.weights, mu.components)])
    p /= p.sum()
    which = rng.choice(p.size, size=n, p=p)
    out = np.empty(n)
    for i, c in enumerate(mu.components):
        sel = np.flatnonzero(which == i)
        if sel.size:
            out[sel], sub = sample_frequencies(c, rng, sel.size, tol)
            info.update(sub)
    return out, info


def to_json(mu):
    if isinstance(mu, Atomic):
        return {"variant": "atomic", "atoms": [[f, m] for f, m in mu.pairs]}
    if isinstance(mu, Density):
        if mu.kind in _BUILTINS:
            key = "half_width" if mu.kind == "uniform" else "sigma"
            return {"variant": "density", "builtin": mu.kind,
                    "params": {key: mu.width, "mass": mu.mass}}
        return {"variant": "density", "grid": list(mu.grid), "values": list(mu.values)}
    if isinstance(mu, CosineProduct):
        return {"variant": "cosine_product", "sequence": mu.sequence.to_dict(), "mass": mu.mass}
    return {"variant": "mixture",
            "components": [{"weight": w, "measure": to_json(c)} for w, c in zip(mu.weights, mu.components)]}


def from_json(d):
    v = d.get("variant")
    if v == "atomic":
        return Atomic.of(d["atoms"])
    if v == "density":
        if "builtin" in d:
            p = d.get("params", {})
            if d["builtin"] == "uniform":
                return Density.uniform(p["half_width"], p.get("mass", 1.0))
            if d["builtin"] == "gaussian":
                return Density.gaussian(p["sigma"], p.get("mass", 1.0))
            raise ValueError(f"unknown builtin density {d['builtin']!r}")
        return Density.tabulated(d["grid"], d["values"])
    if v == "cosine_product":
        return CosineProduct(LambdaSequence.from_dict(d["sequence"]), float(d.get("mass", 1.0)))
    if v == "mixture":
        comps = d["components"]
        return Mixture(tuple(c["weight"] for c in comps), tuple(from_json(c["measure"]) for c in comps))
    raise ValueError(f"unknown measure variant {v!r}")
