# numba implementations of the hot loops; signatures mirror _np_kernels
import numpy as np
from numba import njit

_opts = dict(cache=True, nogil=True)


@njit(**_opts)
def trig_grid(t0, dt, n, freqs, a, b):
    out = np.empty(n)
    m = freqs.shape[0]
    for i in range(n):
        t = t0 + i * dt
        s = 0.0
        for k in range(m):
            w = freqs[k] * t
            s += a[k] * np.cos(w) + b[k] * np.sin(w)
        out[i] = s
    return out


@njit(**_opts)
def _trig_at(t, freqs, a, b):
    s = 0.0
    for k in range(freqs.shape[0]):
        w = freqs[k] * t
        s += a[k] * np.cos(w) + b[k] * np.sin(w)
    return s


@njit(**_opts)
def classify_grid(v, tangent_tol):
    n = v.shape[0]
    cross = np.empty(n, np.int64)
    exact = np.empty(n, np.int64)
    tang = np.empty(n, np.int64)
    nc = 0
    ne = 0
    nt = 0
    for i in range(n - 1):
        if v[i] * v[i + 1] < 0.0:
            cross[nc] = i
            nc += 1
    for i in range(n):
        left_cross = i > 0 and v[i - 1] * v[i] < 0.0
        right_cross = i < n - 1 and v[i] * v[i + 1] < 0.0
        if left_cross or right_cross:
            continue
        if v[i] == 0.0 and 0 < i < n - 1 and v[i - 1] * v[i + 1] < 0.0:
            exact[ne] = i
            ne += 1
            continue
        if abs(v[i]) < tangent_tol:
            if i > 0 and abs(v[i - 1]) < abs(v[i]):
                continue
            if i < n - 1 and abs(v[i + 1]) < abs(v[i]):
                continue
            tang[nt] = i
            nt += 1
    return cross[:nc].copy(), exact[:ne].copy(), tang[:nt].copy()


@njit(**_opts)
def bisect_trig(lo, hi, freqs, a, b, n_iter):
    m = lo.shape[0]
    root = np.empty(m)
    width = np.empty(m)
    for j in range(m):
        x0 = lo[j]
        x1 = hi[j]
        f0 = _trig_at(x0, freqs, a, b)
        for _ in range(n_iter):
            xm = 0.5 * (x0 + x1)
            fm = _trig_at(xm, freqs, a, b)
            if fm == 0.0:
                x0 = xm
                x1 = xm
                break
            if (fm < 0.0) == (f0 < 0.0):
                x0 = xm
                f0 = fm
            else:
                x1 = xm
        root[j] = 0.5 * (x0 + x1)
        width[j] = x1 - x0
    return root, width


@njit(**_opts)
def _interp_coeffs(v, i):
    # local interpolant on s in [0, 1] between samples i and i+1
    n = v.shape[0]
    if i >= 1 and i + 2 <= n - 1:
        ym, y0, y1, y2 = v[i - 1], v[i], v[i + 1], v[i + 2]
        c0 = y0
        c1 = -ym / 3.0 - y0 / 2.0 + y1 - y2 / 6.0
        c2 = ym / 2.0 - y0 + y1 / 2.0
        c3 = -ym / 6.0 + y0 / 2.0 - y1 / 2.0 + y2 / 6.0
        return c0, c1, c2, c3
    return v[i], v[i + 1] - v[i], 0.0, 0.0


@njit(**_opts)
def bisect_grid(v, idx, t0, dt, n_iter):
    m = idx.shape[0]
    root = np.empty(m)
    width = np.empty(m)
    for j in range(m):
        i = idx[j]
        c0, c1, c2, c3 = _interp_coeffs(v, i)
        s0 = 0.0
        s1 = 1.0
        f0 = c0
        for _ in range(n_iter):
            sm = 0.5 * (s0 + s1)
            fm = c0 + sm * (c1 + sm * (c2 + sm * c3))
            if fm == 0.0:
                s0 = sm
                s1 = sm
                break
            if (fm < 0.0) == (f0 < 0.0):
                s0 = sm
                f0 = fm
            else:
                s1 = sm
        root[j] = t0 + (i + 0.5 * (s0 + s1)) * dt
        width[j] = (s1 - s0) * dt
    return root, width


@njit(**_opts)
def cosprod(t_arr, lams, sqtail, tol, order):
    m = t_arr.shape[0]
    kmax = lams.shape[0]
    out = np.empty(m)
    nused = np.empty(m, np.int64)
    err = np.empty(m)
    for i in range(m):
        t = abs(t_arr[i])
        p0 = 1.0
        p1 = 0.0
        p2 = 0.0
        k = 0
        e = 0.0
        while True:
            if k == kmax or lams[k] * t < 1.0:
                s = sqtail[k]
                e0 = abs(p0) * t * t * s / 2.0
                if order == 0:
                    e = e0
                elif order == 1:
                    e = abs(p1) * t * t * s / 2.0 + abs(p0) * t * s
                else:
                    e = (abs(p2) * t * t * s / 2.0 + 2.0 * abs(p1) * t * s
                         + abs(p0) * (s + t * t * s * s))
                if k == kmax or e <= tol:
                    break
            lam = lams[k]
            c = np.cos(lam * t)
            sn = np.sin(lam * t)
            f1 = -lam * sn
            f2 = -lam * lam * c
            p2 = p2 * c + 2.0 * p1 * f1 + p0 * f2
            p1 = p1 * c + p0 * f1
            p0 = p0 * c
            k += 1
        if order == 0:
            out[i] = p0
        elif order == 1:
            out[i] = p1 if t_arr[i] >= 0.0 else -p1
        else:
            out[i] = p2
        nused[i] = k
        err[i] = e
    return out, nused, err


@njit(**_opts)
def merge_sorted(points, masses, tol):
    n = points.shape[0]
    xp = np.empty(n)
    mp = np.empty(n)
    if n == 0:
        return xp, mp
    g = 0
    anchor = points[0]
    wsum = masses[0] * points[0]
    msum = masses[0]
    for i in range(1, n):
        if points[i] - anchor <= tol:
            wsum += masses[i] * points[i]
            msum += masses[i]
        else:
            xp[g] = wsum / msum if msum > 0.0 else anchor
            mp[g] = msum
            g += 1
            anchor = points[i]
            wsum = masses[i] * points[i]
            msum = masses[i]
    xp[g] = wsum / msum if msum > 0.0 else anchor
    mp[g] = msum
    g += 1
    return xp[:g].copy(), mp[:g].copy()


@njit(**_opts)
def ball_mass(points, masses, r):
    # sum_i m_i * sum_{|x_j - x_i| < r} m_j over sorted points
    n = points.shape[0]
    cum = np.empty(n + 1)
    cum[0] = 0.0
    for i in range(n):
        cum[i + 1] = cum[i] + masses[i]
    total = 0.0
    lo = 0
    hi = 0
    for i in range(n):
        x = points[i]
        while lo < n and points[lo] <= x - r:
            lo += 1
        if hi < i:
            hi = i
        while hi < n and points[hi] < x + r:
            hi += 1
        total += masses[i] * (cum[hi] - cum[lo])
    return total
