import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gausszeros import simulate as sim
from gausszeros import spectral as sp
from gausszeros.covariance import CovarianceKernel
from gausszeros.errors import EmbeddingError
from gausszeros.presets import preset


def test_streams_are_reproducible_and_distinct():
    a = sim.stream(5, 0, 1, 2).standard_normal(4)
    np.testing.assert_array_equal(a, sim.stream(5, 0, 1, 2).standard_normal(4))
    assert not np.allclose(a, sim.stream(5, 0, 1, 3).standard_normal(4))
    # full u64 seeds are accepted
    sim.stream(2**64 - 1, 3, 0).random()


def test_atomic_cos_zeros_are_lattice():
    mu, _ = preset("degenerate_cos")
    path = sim.sample_atomic(mu, 0.0, 0.05, 2001, sim.stream(1, 0))
    z = sim.count_zeros(path).zeros
    np.testing.assert_allclose(np.diff(z), math.pi, atol=1e-9)


def test_count_zeros_exact_grid_zero():
    p = sim.PathSample(0.0, 1.0, np.array([1.0, 0.0, -1.0, -2.0]))
    z = sim.count_zeros(p)
    assert list(z.zeros) == [1.0]
    assert z.widths[0] == 0.0


def test_count_zeros_flags_tangency():
    t = np.arange(0, 2.001, 0.01)
    p = sim.PathSample(0.0, 0.01, (t - 1.0) ** 2 + 1e-9)
    z = sim.count_zeros(p)
    assert len(z) == 0 and len(z.flags) == 1


def test_count_zeros_cubic_refinement():
    t = np.arange(0, 4.001, 0.1)
    p = sim.PathSample(0.0, 0.1, np.sin(t))
    z = sim.count_zeros(p)
    assert z.zeros[0] == pytest.approx(math.pi, abs=1e-5)


def test_circulant_gaussian_embedding():
    K = CovarianceKernel(sp.Density.gaussian(1.0))
    s = sim.CirculantSampler(K, 0.1, 512)
    assert s.clipped < 1e-8
    reps = 10000
    x = np.empty(reps)
    y = np.empty(reps)
    for r in range(reps):
        v = s.sample(0.0, sim.stream(9, r)).values
        x[r], y[r] = v[100], v[101]
    prod = x * y
    se = np.std(prod, ddof=1) / math.sqrt(reps)
    assert abs(np.mean(prod) - math.exp(-0.005)) < 3 * se


def test_circulant_cos_exact():
    K = CovarianceKernel(sp.Atomic.of([(1.0, 1.0)]))
    s = sim.CirculantSampler(K, math.pi / 8, 64)
    assert s.clipped == 0.0


def test_circulant_ceiling():
    K = CovarianceKernel(sp.Density.uniform(1.0))
    with pytest.raises(EmbeddingError):
        sim.CirculantSampler(K, 0.05, 400)


def test_spectral_mc_covariance():
    mu, _ = preset("uniform_sinc")
    reps = 4000
    prods = np.empty(reps)
    for r in range(reps):
        v = sim.sample_spectral_mc(mu, 32, 0.0, 0.5, 3, sim.stream(2, r)).values
        prods[r] = v[0] * v[2]
    K = CovarianceKernel(mu)
    se = np.std(prods, ddof=1) / math.sqrt(reps)
    assert abs(prods.mean() - K.eval(1.0)) < 4 * se


def test_path_dump_load(tmp_path):
    p = sim.PathSample(-1.0, 0.25, np.array([0.5, -1.5, 2.0]), 7, "circulant", {"embedding_size": 8})
    p.dump(str(tmp_path / "p"))
    q = sim.PathSample.load(str(tmp_path / "p"))
    np.testing.assert_array_equal(q.values, p.values)
    assert (q.t0, q.dt, q.seed, q.method, q.method_params) == (-1.0, 0.25, 7, "circulant", {"embedding_size": 8})


def test_indicator_fourier_and_autocorrelation():
    phi = sim.Indicator(-1.0, 1.0)
    assert phi.integral() == 2.0
    assert abs(phi.fourier(0.0)) == pytest.approx(2.0)
    assert phi.fourier_abs2(1.0) == pytest.approx((2 * math.sin(1.0)) ** 2)
    np.testing.assert_allclose(phi.autocorrelation(np.array([0.0, 1.0, 3.0])), [2.0, 1.0, 0.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=6, unique=True), st.floats(-4, 4))
def test_piecewise_autocorrelation_matches_numeric(edges, z):
    e = sorted(edges)
    if min(np.diff(e)) < 1e-3:
        return
    levels = np.linspace(1.0, -0.5, len(e) - 1)
    phi = sim.PiecewiseConstant(e, levels)
    x = np.linspace(e[0] - 5, e[-1] + 5, 200001)
    h = x[1] - x[0]
    numeric = np.sum(phi(x) * phi(x + z)) * h
    assert phi.autocorrelation(np.array([z]))[0] == pytest.approx(numeric, abs=5e-3)


def test_tabulated_phi():
    g = np.linspace(-1, 1, 201)
    phi = sim.Tabulated(g, 1 - g * g)
    assert phi.integral() == pytest.approx(4 / 3, abs=1e-4)
    with pytest.raises(ValueError):
        sim.Tabulated(g, np.ones_like(g))


def test_linear_statistic_window_check():
    z = sim.ZeroSet(np.array([0.5, 1.5]), np.zeros(2), [], (-2.0, 2.0))
    assert sim.linear_statistic(z, sim.Indicator(-1, 1), 1.0) == 1.0
    with pytest.raises(ValueError):
        sim.linear_statistic(z, sim.Indicator(-1, 1), 5.0)


def test_variance_experiment_degenerate_small():
    mu, _ = preset("degenerate_cos")
    rep = sim.variance_experiment(mu, sim.Indicator(-1, 1), [10.0, 20.0], 400, "atomic_exact", 3)
    for r in rep.rows:
        assert r.var_count <= 0.25 + 3 * r.var_se
        assert r.mean_count == pytest.approx(2 * r.T / math.pi, abs=0.1)
    lines = rep.to_csv().splitlines()
    assert lines[0].split(",") == list(sim.CSV_COLUMNS)


def test_variance_experiment_thread_invariance():
    mu, _ = preset("two_atoms")
    a = sim.variance_experiment(mu, sim.Indicator(-1, 1), [5.0], 64, "atomic_exact", 11, threads=1)
    b = sim.variance_experiment(mu, sim.Indicator(-1, 1), [5.0], 64, "atomic_exact", 11, threads=3)
    assert a.to_csv() == b.to_csv()


def test_predictability_degenerate():
    mu, _ = preset("degenerate_cos")
    rep = sim.predictability_experiment(mu, (0.0, 1.0), [math.pi, 1.0], 200, 5)
    assert rep.agreement[0] == 1.0
    assert rep.agreement[1] < 1.0
    assert rep.covariance[0] == pytest.approx(-1.0)


def test_circulant_sinc_taper_keeps_curvature():
    # clipping spreads mass up to the Nyquist frequency; the tapered padding
    # keeps the implied -C''(0) within 0.5% (plain padding: about 2.6%)
    K = CovarianceKernel(preset("uniform_sinc")[0])
    dt, n = 0.05, 409
    s = sim.CirculantSampler(K, dt, n, ceiling=1e-3)
    assert s.params["extension"] == "taper"
    lam = s.sqrt_eig ** 2
    w = np.full(lam.size, 2.0)
    w[0] = w[-1] = 1.0
    om = 2 * np.pi * np.arange(lam.size) / (s.M * dt)
    c0, c1 = np.sum(w * lam) / s.M, np.sum(w * lam * np.cos(om * dt)) / s.M
    assert (c0 - c1) / (1.0 - K.eval(dt)) == pytest.approx(1.0, abs=5e-3)
