"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once to trigger compilation, then the best of ``repeat``
timings is reported for both backends together with the speedup and the
maximum deviation between their outputs.
"""
import argparse
import time

import numpy as np

from gausszeros import kernels


def f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def cases():
    rng = np.random.default_rng(0)
    f = np.sort(rng.uniform(0.2, 3.0, 64))
    a, b = rng.standard_normal(64), rng.standard_normal(64)
    v = kernels.numpy_impl.trig_grid(0.0, 0.05, 200_000, f, a, b)
    idx = np.nonzero(v[:-1] * v[1:] < 0)[0].astype(np.int64)
    lo = idx * 0.05
    lams = 0.5 ** np.arange(1, 41)
    sq = np.array([np.sum(lams[k:] ** 2) for k in range(41)])
    t = np.linspace(0.0, 200.0, 200_000)
    pts = np.sort(rng.uniform(-1, 1, 1 << 16))
    ms = np.full(pts.size, 1.0 / pts.size)
    yield "trig_grid 64x2e5", lambda m: m.trig_grid(0.0, 0.05, 200_000, f, a, b)
    yield "classify_grid 2e5", lambda m: m.classify_grid(v, 1e-6)
    yield f"bisect_trig {idx.size}", lambda m: m.bisect_trig(f64(lo), f64(lo + 0.05), f, a, b, 40)
    yield f"bisect_grid {idx.size}", lambda m: m.bisect_grid(v, idx, 0.0, 0.05, 40)
    yield "cosprod 2e5", lambda m: m.cosprod(t, lams, sq, 1e-12, 2)
    yield "merge_sorted 65536", lambda m: m.merge_sorted(pts, ms, 1e-5)
    yield "ball_mass 65536", lambda m: m.ball_mass(pts, ms, 1e-3)


def best(fn, repeat):
    out = fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def deviation(x, y):
    if isinstance(x, tuple):
        return max(deviation(p, q) for p, q in zip(x, y))
    return float(np.max(np.abs(np.asarray(x, float) - np.asarray(y, float)), initial=0.0))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.numba_impl is None:
        raise SystemExit("numba is not importable")
    print(f"{'kernel':<22}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}{'max dev':>10}")
    for name, call in cases():
        tn, on = best(lambda: call(kernels.numba_impl), args.repeat)
        tp, op = best(lambda: call(kernels.numpy_impl), args.repeat)
        print(f"{name:<22}{tn * 1e3:>10.2f}{tp * 1e3:>10.2f}{tp / tn:>9.1f}{deviation(on, op):>10.1e}")


if __name__ == "__main__":
    main()
