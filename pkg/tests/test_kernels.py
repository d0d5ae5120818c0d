import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gausszeros import kernels

nb = kernels.numba_impl
npk = kernels.numpy_impl
both = pytest.mark.skipif(nb is None, reason="numba unavailable")

finite = st.floats(-5.0, 5.0, allow_nan=False)


def _trig(seed, k=4):
    rng = np.random.default_rng(seed)
    return np.sort(rng.uniform(0.2, 3.0, k)), rng.standard_normal(k), rng.standard_normal(k)


def test_trig_grid_oracle():
    v = kernels.trig_grid(0.0, math.pi / 2, 3, [1.0], [1.0], [2.0])
    np.testing.assert_allclose(v, [1.0, 2.0, -1.0], atol=1e-15)


@both
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), finite)
def test_trig_grid_parity(seed, t0):
    f, a, b = _trig(seed)
    x = nb.trig_grid(t0, 0.01, 500, f, a, b)
    y = npk.trig_grid(t0, 0.01, 500, f, a, b)
    np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)


def test_classify_grid_oracle():
    v = np.array([1.0, -1.0, 0.0, 2.0, 0.5, 1e-9, 0.5])
    cross, exact, tang = kernels.classify_grid(v, 1e-6)
    assert list(cross) == [0]
    assert list(exact) == [2]
    assert list(tang) == [5]


@both
@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([-2.0, -1.0, 0.0, 1e-9, 1.0, 3.0]), min_size=3, max_size=40))
def test_classify_parity(vals):
    v = np.array(vals)
    for x, y in zip(nb.classify_grid(v, 1e-6), npk.classify_grid(v, 1e-6)):
        assert list(x) == list(y)


def test_bisect_trig_finds_cos_zero():
    z = kernels.bisect_trig([1.0], [2.0], [1.0], [1.0], [0.0], 60)
    assert abs(z[0] - math.pi / 2) < 1e-14


@both
def test_bisect_parity():
    f, a, b = _trig(7)
    v = npk.trig_grid(0.0, 0.05, 400, f, a, b)
    idx = np.nonzero(v[:-1] * v[1:] < 0)[0]
    lo, hi = idx * 0.05, (idx + 1) * 0.05
    np.testing.assert_allclose(nb.bisect_trig(lo, hi, f, a, b, 50), npk.bisect_trig(lo, hi, f, a, b, 50),
                               atol=1e-13)
    np.testing.assert_allclose(nb.bisect_grid(v, idx.astype(np.int64), 0.0, 0.05, 50),
                               npk.bisect_grid(v, idx.astype(np.int64), 0.0, 0.05, 50), atol=1e-12)


def test_bisect_grid_cubic_exact():
    # cubic interpolation reproduces a cubic exactly
    t = np.arange(6) * 0.5
    v = (t - 1.2) * (t + 3.0) * (t + 4.0)
    z = kernels.bisect_grid(v, [2], 0.0, 0.5, 60)
    assert abs(z[0] - 1.2) < 1e-12


def _geom_arrays(n):
    lams = 0.5 ** np.arange(1, n + 1)
    sq = np.array([np.sum(lams[k:] ** 2) + 0.25 ** n / 3.0 for k in range(n + 1)])
    return lams, sq


def test_cosprod_vieta_oracle():
    lams, sq = _geom_arrays(40)
    t = np.array([0.5, 1.0, 7.0])
    v, n, _ = kernels.cosprod(t, lams, sq, -1.0, 0)
    np.testing.assert_allclose(v, np.sin(t) / t, atol=1e-12)


@both
@pytest.mark.parametrize("order", [0, 1, 2])
def test_cosprod_parity(order):
    lams, sq = _geom_arrays(40)
    t = np.linspace(0.0, 30.0, 301)
    x = nb.cosprod(t, lams, sq, 1e-12, order)
    y = npk.cosprod(t, lams, sq, 1e-12, order)
    np.testing.assert_allclose(x[0], y[0], atol=1e-13)
    np.testing.assert_array_equal(x[1], y[1])


@both
@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30), st.floats(1e-6, 0.5))
def test_merge_and_ball_parity(pts, tol):
    p = np.sort(np.array(pts))
    m = np.full(p.size, 1.0 / p.size)
    for x, y in zip(nb.merge_sorted(p, m, tol), npk.merge_sorted(p, m, tol)):
        np.testing.assert_allclose(x, y, atol=1e-15)
    assert abs(nb.ball_mass(p, m, tol) - npk.ball_mass(p, m, tol)) < 1e-14


def test_ball_mass_oracle():
    # two atoms of mass 1/2 at distance 1: only the diagonal contributes for r <= 1
    assert kernels.ball_mass([0.0, 1.0], [0.5, 0.5], 1.0) == pytest.approx(0.5)
    assert kernels.ball_mass([0.0, 1.0], [0.5, 0.5], 1.5) == pytest.approx(1.0)


def test_backend_selection():
    assert kernels.BACKEND in ("numba", "numpy")
    assert kernels.implementation("numpy") is npk
    with pytest.raises(ValueError):
        kernels.implementation("fortran")


@pytest.mark.parametrize("env,expected", [({"GAUSSZEROS_DISABLE_NUMBA": "1"}, "numpy"),
                                          ({"GAUSSZEROS_BACKEND": "numpy"}, "numpy")])
def test_env_flag_selects_fallback(env, expected):
    import os
    import subprocess
    import sys
    full = dict(os.environ, **env)
    out = subprocess.run([sys.executable, "-c", "from gausszeros import kernels; print(kernels.BACKEND)"],
                         env=full, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
