import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gausszeros import covariance as cov
from gausszeros import spectral as sp
from gausszeros.bernoulli import LambdaSequence
from gausszeros.presets import preset

ts = st.floats(-50.0, 50.0, allow_nan=False)


def K(name):
    return cov.CovarianceKernel(preset(name)[0])


def test_sinc_oracle():
    k = cov.CovarianceKernel(sp.Density.uniform(1.0))
    t = np.array([0.0, 1e-4, 0.5, 2.0, 10.0])
    np.testing.assert_allclose(k.eval(t), np.sinc(t / math.pi), atol=1e-14)
    # C'(t) = (t cos t - sin t)/t^2
    t1 = np.array([0.5, 2.0, 10.0])
    np.testing.assert_allclose(k.eval(t1, 1), (t1 * np.cos(t1) - np.sin(t1)) / t1**2, atol=1e-14)
    assert k.eval(0.0, 2) == pytest.approx(-1.0 / 3.0, abs=1e-15)


def test_gaussian_oracle():
    k = K("gaussian")
    t = np.linspace(-4, 4, 17)
    np.testing.assert_allclose(k.eval(t), np.exp(-t * t / 2), atol=1e-14)
    np.testing.assert_allclose(k.eval(t, 2), (t * t - 1) * np.exp(-t * t / 2), atol=1e-13)


def test_atomic_oracle():
    k = K("degenerate_cos")
    assert k.eval(math.pi) == pytest.approx(-1.0, abs=1e-15)
    assert k.eval(1.3, 1) == pytest.approx(-math.sin(1.3), abs=1e-15)


def test_cosine_product_vieta():
    k = cov.CovarianceKernel(sp.CosineProduct(LambdaSequence.geometric(0.5)))
    t = np.array([0.3, 3.0, 17.0])
    np.testing.assert_allclose(k.eval(t), np.sin(t) / t, atol=1e-11)


def test_tabulated_vs_builtin():
    grid = np.linspace(0.0, 1.0, 5)
    k1 = cov.CovarianceKernel(sp.Density.tabulated(grid, np.full(5, 0.5)))
    k2 = cov.CovarianceKernel(sp.Density.uniform(1.0))
    t = np.linspace(0.0, 40.0, 81)
    for order in (0, 1, 2):
        np.testing.assert_allclose(k1.eval(t, order), k2.eval(t, order), atol=1e-11)


@settings(max_examples=60, deadline=None)
@given(ts)
def test_even_odd_and_bounded(t):
    for name in ("two_atoms", "uniform_sinc", "gaussian", "bernoulli_factorial"):
        k = K(name)
        c = k.eval(t)
        assert abs(c) <= 1.0 + 1e-12
        assert c == pytest.approx(k.eval(-t), abs=1e-12)
        assert k.eval(t, 1) == pytest.approx(-k.eval(-t, 1), abs=1e-12)


def test_normalized_derivatives_at_zero():
    for name in ("two_atoms", "uniform_sinc", "gaussian", "bernoulli_factorial"):
        k = K(name)
        assert k.eval(0.0) == pytest.approx(1.0, abs=1e-12)
        assert k.eval(0.0, 1) == 0.0
        assert k.eval(0.0, 2) == pytest.approx(-1.0, abs=1e-10)


def test_verdict_rules():
    assert cov.verdict([1.0, 2.0, 4.0, 8.0]) == "diverges"
    assert cov.verdict([1.0, 1.5, 1.50001]) == "converges"
    assert cov.verdict([1e-15, 1e-14]) == "converges"
    assert cov.verdict([1.0, 1.2, 1.3]) == "inconclusive"


def test_geman_scan_engineered():
    # g(t) = t makes the integrand 1/t: each level adds about 2^n
    rep = cov.geman_integral_scan(lambda t: 1.0 / t, 0.1, levels=6)
    assert rep.verdict == "diverges"
    rep = cov.geman_integral_scan(lambda t: t ** 3, 0.1, levels=6)
    assert rep.verdict == "converges"


@pytest.mark.parametrize("name", ["gaussian", "uniform_sinc", "two_atoms", "degenerate_cos"])
def test_geman_smooth_presets_converge(name):
    assert cov.geman_check(K(name)).verdict == "converges"


def test_l2_scans():
    assert cov.l2_condition_scan(K("uniform_sinc"), "C").verdict == "converges"
    assert cov.l2_condition_scan(K("two_atoms"), "C").verdict == "diverges"
    assert cov.l2_condition_scan(K("degenerate_cos"), "C+C''").verdict == "converges"


def test_l2_sinc_value_frozen():
    rep = cov.l2_condition_scan(cov.CovarianceKernel(sp.Density.uniform(1.0)), "C")
    # int_0^inf (sin t/t)^2 dt = pi/2 with tail ~ 1/(2 t_max)
    assert rep.estimates[-1] == pytest.approx(math.pi / 2, abs=2e-4)


def test_report_serialization(tmp_path):
    rep = cov.l2_condition_scan(K("gaussian"), "C", [16.0, 32.0])
    d = rep.to_dict()
    assert d["verdict"] == rep.verdict
    lines = rep.to_csv().splitlines()
    assert lines[0] == "parameter,estimate,error_bound"
    assert len(lines) == 3


def test_cesaro():
    assert cov.cesaro_mean(K("degenerate_cos"), 1000.0, 2) == pytest.approx(0.5, abs=1e-3)
    assert abs(cov.cesaro_mean(K("uniform_sinc"), 1000.0, 1)) < 2e-3


def test_recurrence_times_cos():
    rec = cov.recurrence_times(K("degenerate_cos"), 1e-3, 10.0)
    np.testing.assert_allclose([t for t, _ in rec], [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-6)
    assert cov.recurrence_times(K("uniform_sinc"), 1e-2, 100.0) == []
