# pure-numpy implementations of the hot loops; signatures mirror _nb_kernels
import numpy as np

_CHUNK = 1 << 16


def trig_grid(t0, dt, n, freqs, a, b):
    out = np.empty(n)
    for s in range(0, n, _CHUNK):
        t = t0 + np.arange(s, min(n, s + _CHUNK)) * dt
        w = np.multiply.outer(t, freqs)
        out[s:s + t.size] = np.cos(w) @ a + np.sin(w) @ b
    return out


def _trig_at(t, freqs, a, b):
    w = np.multiply.outer(t, freqs)
    return np.cos(w) @ a + np.sin(w) @ b


def classify_grid(v, tangent_tol):
    n = v.size
    prod = v[:-1] * v[1:]
    cross = np.flatnonzero(prod < 0.0)
    near_cross = np.zeros(n, bool)
    near_cross[cross] = True
    near_cross[cross + 1] = True
    inner = np.zeros(n, bool)
    inner[1:-1] = (v[:-2] * v[2:]) < 0.0
    exact_mask = (v == 0.0) & inner & ~near_cross
    av = np.abs(v)
    lmin = np.ones(n, bool)
    lmin[1:] &= av[:-1] >= av[1:]
    lmin[:-1] &= av[1:] >= av[:-1]
    tang_mask = (av < tangent_tol) & lmin & ~near_cross & ~exact_mask
    return cross.astype(np.int64), np.flatnonzero(exact_mask), np.flatnonzero(tang_mask)


def bisect_trig(lo, hi, freqs, a, b, n_iter):
    x0 = lo.astype(float).copy()
    x1 = hi.astype(float).copy()
    f0 = _trig_at(x0, freqs, a, b)
    done = np.zeros(x0.size, bool)
    for _ in range(n_iter):
        xm = 0.5 * (x0 + x1)
        fm = _trig_at(xm, freqs, a, b)
        hit = (fm == 0.0) & ~done
        x0[hit] = xm[hit]
        x1[hit] = xm[hit]
        done |= hit
        same = ((fm < 0.0) == (f0 < 0.0)) & ~done
        x0 = np.where(same, xm, x0)
        f0 = np.where(same, fm, f0)
        x1 = np.where(~same & ~done, xm, x1)
    return 0.5 * (x0 + x1), x1 - x0


def _interp_coeffs(v, idx):
    n = v.size
    c0 = v[idx]
    c1 = v[idx + 1] - v[idx]
    c2 = np.zeros(idx.size)
    c3 = np.zeros(idx.size)
    full = (idx >= 1) & (idx + 2 <= n - 1)
    j = idx[full]
    ym, y0, y1, y2 = v[j - 1], v[j], v[j + 1], v[j + 2]
    c1[full] = -ym / 3.0 - y0 / 2.0 + y1 - y2 / 6.0
    c2[full] = ym / 2.0 - y0 + y1 / 2.0
    c3[full] = -ym / 6.0 + y0 / 2.0 - y1 / 2.0 + y2 / 6.0
    return c0, c1, c2, c3


def bisect_grid(v, idx, t0, dt, n_iter):
    c0, c1, c2, c3 = _interp_coeffs(v, idx)
    s0 = np.zeros(idx.size)
    s1 = np.ones(idx.size)
    f0 = c0.copy()
    done = np.zeros(idx.size, bool)
    for _ in range(n_iter):
        sm = 0.5 * (s0 + s1)
        fm = c0 + sm * (c1 + sm * (c2 + sm * c3))
        hit = (fm == 0.0) & ~done
        s0[hit] = sm[hit]
        s1[hit] = sm[hit]
        done |= hit
        same = ((fm < 0.0) == (f0 < 0.0)) & ~done
        s0 = np.where(same, sm, s0)
        f0 = np.where(same, fm, f0)
        s1 = np.where(~same & ~done, sm, s1)
    return t0 + (idx + 0.5 * (s0 + s1)) * dt, (s1 - s0) * dt


def _tail_error(p0, p1, p2, t, s, order):
    if order == 0:
        return np.abs(p0) * t * t * s / 2.0
    if order == 1:
        return np.abs(p1) * t * t * s / 2.0 + np.abs(p0) * t * s
    return (np.abs(p2) * t * t * s / 2.0 + 2.0 * np.abs(p1) * t * s
            + np.abs(p0) * (s + t * t * s * s))


def cosprod(t_arr, lams, sqtail, tol, order):
    t = np.abs(np.asarray(t_arr, float))
    m = t.size
    kmax = lams.size
    p0 = np.ones(m)
    p1 = np.zeros(m)
    p2 = np.zeros(m)
    nused = np.zeros(m, np.int64)
    err = np.zeros(m)
    active = np.ones(m, bool)
    for k in range(kmax + 1):
        if not active.any():
            break
        if k == kmax:
            ok = active
        else:
            ok = active & (lams[k] * t < 1.0)
        e = _tail_error(p0, p1, p2, t, sqtail[k], order)
        stop = ok & ((e <= tol) | (k == kmax))
        err[stop] = e[stop]
        nused[stop] = k
        active &= ~stop
        if k == kmax:
            break
        lam = lams[k]
        c = np.cos(lam * t)
        sn = np.sin(lam * t)
        f1 = -lam * sn
        f2 = -lam * lam * c
        q2 = p2 * c + 2.0 * p1 * f1 + p0 * f2
        q1 = p1 * c + p0 * f1
        q0 = p0 * c
        p0 = np.where(active, q0, p0)
        p1 = np.where(active, q1, p1)
        p2 = np.where(active, q2, p2)
    if order == 0:
        out = p0
    elif order == 1:
        out = np.where(np.asarray(t_arr) >= 0.0, p1, -p1)
    else:
        out = p2
    return out, nused, err


def merge_sorted(points, masses, tol):
    n = points.size
    if n == 0:
        return points.copy(), masses.copy()
    # anchored grouping needs a scan; gaps above tol split groups exactly
    # whenever no group spans more than tol, which is the intended regime
    start = np.empty(n, bool)
    start[0] = True
    start[1:] = np.diff(points) > tol
    if not start.all():
        # verify groups do not drift past tol from their anchor
        gid = np.cumsum(start) - 1
        anchors = points[start][gid]
        drift = points - anchors > tol
        while drift.any():
            start |= drift & ~start & _first_in_run(drift, gid)
            gid = np.cumsum(start) - 1
            anchors = points[start][gid]
            drift = points - anchors > tol
    idx = np.flatnonzero(start)
    msum = np.add.reduceat(masses, idx)
    wsum = np.add.reduceat(masses * points, idx)
    anchor = points[idx]
    xp = np.where(msum > 0.0, wsum / np.where(msum > 0.0, msum, 1.0), anchor)
    return xp, msum


def _first_in_run(flag, gid):
    # first flagged element within each group
    out = np.zeros(flag.size, bool)
    f = np.flatnonzero(flag)
    if f.size:
        g = gid[f]
        first = np.ones(f.size, bool)
        first[1:] = g[1:] != g[:-1]
        out[f[first]] = True
    return out


def ball_mass(points, masses, r):
    cum = np.concatenate(([0.0], np.cumsum(masses)))
    lo = np.searchsorted(points, points - r, side="right")
    hi = np.searchsorted(points, points + r, side="left")
    return float(np.dot(masses, cum[hi] - cum[lo]))
