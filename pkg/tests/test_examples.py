"""Worked operation examples with known answers, one test per example family."""
import math

import numpy as np
import pytest

from gausszeros import bernoulli as bn
from gausszeros import chaos
from gausszeros import simulate as sim
from gausszeros import spectral as sp
from gausszeros.covariance import CovarianceKernel, recurrence_times
from gausszeros.presets import preset, raw_preset

TWO_FREQ = sp.Atomic.of([(1.0, 0.5), (1.0 / math.pi, 0.5)])


def test_cosprod_exact_zeros():
    # the factor cos(pi/2) is zero up to the rounding of pi itself
    assert abs(bn.cosprod_eval(bn.LambdaSequence.factorial(), 1.0)[0]) < 1e-16
    assert abs(bn.cosprod_eval(bn.LambdaSequence.geometric(0.5), math.pi)[0]) < 1e-12
    assert bn.cosprod_eval(bn.LambdaSequence.harmonic(), 0.0)[0] == 1.0


def test_cantor_examples():
    assert bn.cantor_criterion(bn.LambdaSequence.geometric(1.0 / 3.0)).holds
    assert bn.cantor_criterion(bn.LambdaSequence.geometric(0.5)).status == "fails"
    assert bn.cantor_criterion(bn.LambdaSequence.factorial()).holds


def test_factorial_recurrence_times_hit_factorials():
    K = CovarianceKernel(sp.CosineProduct(bn.LambdaSequence.factorial()))
    ts = [t for t, _ in recurrence_times(K, 0.1, float(math.factorial(8)))]
    for n in (7, 8):
        assert min(abs(t - math.factorial(n)) for t in ts) < 1e-5


def test_sinc_has_no_recurrence():
    K = CovarianceKernel(raw_preset("uniform_sinc"))
    assert recurrence_times(K, 0.01, 100.0) == []


def test_zero_frequency_path_is_constant():
    mu = sp.Atomic.of([(0.0, 1.0)])
    p = sim.sample_atomic(mu, 0.0, 0.1, 50, sim.stream(7, 0))
    assert np.all(p.values == p.values[0])
    assert p.values[0] == sim.stream(7, 0).standard_normal(2)[0]


def test_atomic_unit_variance_of_value_and_slope():
    mu = preset("two_atoms")[0]
    s = []
    for r in range(4000):
        p = sim.sample_atomic(mu, 0.0, 1e-4, 3, sim.stream(11, 0, r))
        d = (p.values[2] - p.values[0]) / 2e-4
        s.append(p.values[1] ** 2 + d * d)
    # X(t)^2 + X'(t)^2 has mean C(0) - C''(0) = 2
    se = np.std(s, ddof=1) / math.sqrt(len(s))
    assert abs(np.mean(s) - 2.0) < 3 * se


def test_kac_rice_raw_sinc():
    K = CovarianceKernel(raw_preset("uniform_sinc"))
    assert chaos.kac_rice_mean(K, 10.0) == pytest.approx(20.0 / (math.pi * math.sqrt(3.0)), rel=1e-10)
    assert chaos.kac_rice_mean(K, 10.0) == pytest.approx(3.6755, abs=5e-5)


def test_convolution_square_unit_indicator():
    c = chaos.convolution_square(sim.Indicator(0.0, 1.0))
    assert c(1.0) == pytest.approx(1.0, abs=1e-14)
    assert c(0.5) == pytest.approx(0.5, abs=1e-14)
    assert c(2.0) == pytest.approx(0.0, abs=1e-14)


def test_linear_statistic_examples():
    z = sim.ZeroSet(np.array([0.5, 1.5]), np.zeros(2), window=(-10.0, 10.0))
    ind = sim.Indicator(-1.0, 1.0)
    assert sim.linear_statistic(z, ind, 1.0) == 1.0
    assert sim.linear_statistic(z, ind, 2.0) == 2.0
    steps = sim.PiecewiseConstant([0.0, 1.0, 2.0], [1.0, 2.0])
    assert sim.linear_statistic(z, steps, 1.0) == 3.0


def test_bound_single_atom_at_origin():
    mu = sp.Atomic.of([(0.0, 0.3)])
    c = chaos.phi_constants(sim.Indicator(-1.0, 1.0)).c_phi
    for T in (5.0, 40.0):
        assert chaos.bound_var_phi_mu(mu, T, c) == pytest.approx(c * T * T * 0.09, rel=1e-12)


def test_bound_atom_at_one_vanishes():
    mu = sp.Atomic.of([(1.0, 1.0)])
    assert chaos.bound_var_phi_mu(mu, 50.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_periodic_coefficient_zero_integral():
    phi = sim.PiecewiseConstant([-1.0, 0.0, 1.0], [1.0, -1.0])
    mu = sp.Atomic.of([(1.0, 0.5), (2.0, 0.5)])
    r = chaos.periodic_quadratic_coefficient(mu, phi, 50, seed=3)
    assert r.coefficient == 0.0
    assert r.var_Q > 0.0


def test_predictability_two_incommensurable_frequencies():
    K = CovarianceKernel(TWO_FREQ)
    rec = recurrence_times(K, 0.01, 200.0)
    assert rec and all(abs(c) >= 0.99 for _, c in rec)
    shifts = [t for t, _ in rec] + [1.0]
    rep = sim.predictability_experiment(TWO_FREQ, (0.0, 2.0), shifts, 1000, seed=5)
    agree, control = rep.agreement[:-1], rep.agreement[-1]
    assert all(a > control for a in agree)
    assert np.mean(agree) >= 0.95
    # agreement tracks |C|: the sharpest recurrences agree most
    sharp = [a for a, c in zip(agree, rep.covariance) if abs(c) >= 0.998]
    assert sharp and min(sharp) >= 0.95
