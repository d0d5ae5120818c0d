import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gausszeros import bernoulli as bn

FACT = bn.LambdaSequence.factorial()


def test_sequences_oracle():
    g = bn.LambdaSequence.geometric(0.5)
    assert g.lam(1) == 0.5 and g.lam(3) == 0.125
    assert g.tail(2) == pytest.approx(0.25)
    assert FACT.lam(3) == pytest.approx(math.pi / 6)
    h = bn.LambdaSequence.harmonic()
    assert h.second_moment() == pytest.approx(math.pi ** 2 / 6)


def test_vieta_criterion_1():
    err = bn.vieta_check(np.arange(0.0, 50.0 + 1e-9, 0.01), N=40)
    assert err < 1e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-30.0, 30.0))
def test_cosprod_within_bounds(a, t):
    lam = bn.LambdaSequence.geometric(a)
    v, n, e = bn.cosprod_values(lam, t)
    assert abs(v[0]) <= 1.0 + 1e-12
    assert e[0] <= 1e-12


def test_custom_finite_product():
    lam = bn.LambdaSequence.custom([1.0, 0.5])
    v, _, _ = bn.cosprod_values(lam, [0.7])
    assert v[0] == pytest.approx(math.cos(0.7) * math.cos(0.35), abs=1e-15)


def test_cantor():
    assert bn.cantor_criterion(bn.LambdaSequence.geometric(0.4)).holds
    assert bn.cantor_criterion(bn.LambdaSequence.geometric(0.6)).status == "fails"
    assert bn.cantor_criterion(FACT).holds
    assert bn.cantor_criterion(bn.LambdaSequence.custom([1.0, 0.5, 0.5])).status == "undetermined"


def test_factorial_recurrence_frozen():
    r = bn.factorial_recurrence(4)
    assert r.signed_value == pytest.approx(0.8044936588600076, abs=1e-12)
    assert r.lower_bound == pytest.approx(0.0904840437105129, abs=1e-12)
    assert r.prefix_sign == -1 and r.alternating_sign == 1


@pytest.mark.parametrize("n", range(4, 13))
def test_factorial_sandwich(n):
    r = bn.factorial_recurrence(n)
    assert r.lower_bound <= r.signed_value <= 1.0
    assert abs(abs(r.direct_value) - r.signed_value) < 1e-9


def test_tail_lower_bound_matches_product():
    k = np.arange(6, 2_000_001, dtype=float)
    direct = math.exp(np.sum(np.log1p(-math.pi ** 2 / k ** 2)))
    assert bn.tail_lower_bound(5) == pytest.approx(direct, rel=1e-5)


def test_yn_distribution_geometric_half():
    d = bn.yn_distribution(bn.LambdaSequence.geometric(0.5), 4)
    assert d.points.size == 16
    np.testing.assert_allclose(np.diff(d.points), 0.125, atol=1e-15)
    assert d.total_mass() == pytest.approx(1.0)
    assert d.coincidence_probability() == pytest.approx(1 / 16)


def test_yn_merges_coincident_atoms():
    d = bn.yn_distribution(bn.LambdaSequence.custom([1.0, 1.0]), 2)
    np.testing.assert_allclose(d.points, [-2.0, 0.0, 2.0])
    np.testing.assert_allclose(d.masses, [0.25, 0.5, 0.25])


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 10), st.floats(-20, 20))
def test_yn_char_function_is_partial_product(N, t):
    d = bn.yn_distribution(FACT, N)
    assert d.char_function(t)[0] == pytest.approx(np.prod(np.cos(FACT.lams(N) * t)), abs=1e-12)


def test_bracket_index():
    N = bn.bracket_index(FACT, 1e4)
    assert FACT.tail(N - 1) >= 1 / 4e4 > FACT.tail(N)
    assert N == 8


def test_small_ball_n8_exact():
    s = bn.small_ball(FACT, 1e4)
    assert s.N == 8 and s.separated
    assert abs(s.exact_prob - 2.0 ** -8) < 1e-12


def test_small_ball_flagged_above_cap():
    s = bn.small_ball(bn.LambdaSequence.geometric(0.5), 1e12, cap=10)
    assert s.flagged and math.isnan(s.exact_prob)


def test_growth_certificate():
    g = bn.quadratic_growth_certificate(FACT, [1e2, 1e4, 1e6, 1e8], 0.5)
    assert g.increasing
    L = [r[2] for r in g.rows]
    assert all(b > a for a, b in zip(L, L[1:]))
    geo = bn.quadratic_growth_certificate(bn.LambdaSequence.geometric(0.25), [1e2, 1e4], 0.5)
    assert geo.crossover_epsilon == pytest.approx(0.5)
    with pytest.raises(ValueError):
        bn.quadratic_growth_certificate(FACT, [1e2], 2.0)


def test_sequence_dict_round_trip():
    for lam in (FACT, bn.LambdaSequence.geometric(0.3).scaled(2.0), bn.LambdaSequence.custom([2.0, 1.0])):
        assert bn.LambdaSequence.from_dict(lam.to_dict()) == lam
