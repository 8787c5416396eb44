import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfa.errors import DomainError, ParameterError
from mfa.gdms import affine_cantor, cf_full, enumerate_words, estimate_distortion_constant
from mfa.potentials import (PotentialFamily, QTWeights, check_family, cylinder_sum_bracket, ergodic_sum,
                            finiteness_parameter, normalize)
from mfa.thermo import hausdorff_dimension

from conftest import CANTOR_DIM


def test_constant_ergodic_sum():
    c = affine_cantor([1 / 3, 1 / 3])
    u = 0.7
    fam = PotentialFamily.constants({1: math.log(0.5), 2: math.log(0.5)}, u)
    for n in (1, 3, 6):
        w = (1, 2) * (n // 2) + (1,) * (n % 2)
        assert ergodic_sum(c, fam, w, 0.4) == pytest.approx(n * (math.log(0.5) + u * math.log(1 / 3)), rel=1e-13)


def test_cf_geometric_sum():
    assert ergodic_sum(cf_full(2), PotentialFamily.zero(1.0), (1, 1), 0.0) == pytest.approx(math.log(0.25))


@settings(max_examples=50, deadline=None)
@given(u=st.lists(st.integers(1, 3), min_size=1, max_size=4),
       v=st.lists(st.integers(1, 3), min_size=1, max_size=4), x=st.floats(0, 1))
def test_additivity(u, v, x):
    from mfa.gdms import evaluate_word_map
    s = cf_full(3)
    fam = PotentialFamily("affine", {1: (0.3, -0.1), 2: (-0.2, 0.05), 3: (0.1, 0.2)}, u=0.9)
    u, v = tuple(u), tuple(v)
    y, _ = evaluate_word_map(s, v, x)
    whole = ergodic_sum(s, fam, u + v, x, q=1.3, t=-0.2)
    parts = ergodic_sum(s, fam, u, y, q=1.3, t=-0.2) + ergodic_sum(s, fam, v, x, q=1.3, t=-0.2)
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)


def test_affine_bracket_degenerate(binomial):
    system, fam = binomial
    lo, hi = cylinder_sum_bracket(system, fam, (1, 2, 2), q=1.5, t=0.2)
    assert lo == hi


def test_cf_bracket_digit_two():
    lo, hi = cylinder_sum_bracket(cf_full(2), PotentialFamily.zero(1.0), (2,))
    assert lo == pytest.approx(math.log(1 / 9))
    assert hi == pytest.approx(math.log(1 / 4))


def test_bracket_bounded_variation():
    s = cf_full(2)
    logK = math.log(estimate_distortion_constant(s))
    fam = PotentialFamily.constants({1: 0.1, 2: -0.2}, 1.0)
    for q, t in ((1.0, 0.0), (2.0, -0.5), (-0.5, 1.0)):
        for n in range(1, 7):
            for w in enumerate_words(s, n):
                lo, hi = cylinder_sum_bracket(s, fam, w, q, t)
                assert hi - lo <= abs(q * fam.u + t) * logK + 1e-12


def test_normalize_probability_encoding(binomial):
    system, fam = binomial
    assert abs(fam.normalization) < 1e-10


def test_normalize_geometric_at_dimension():
    s = cf_full(2)
    hd = hausdorff_dimension(s, n_max=None).value
    assert abs(normalize(s, PotentialFamily.zero(hd)).normalization) < 1e-10


def test_shift_moves_normalization():
    s = cf_full(3)
    fam = PotentialFamily.constants({1: 0.2, 2: 0.0, 3: -0.4}, 0.8)
    a = normalize(s, fam).normalization
    b = normalize(s, PotentialFamily.constants({1: 0.7, 2: 0.5, 3: 0.1}, 0.8)).normalization
    assert b - a == pytest.approx(0.5, abs=1e-10)
    assert fam.shifted(0.5).psi(1, 0.3) == pytest.approx(0.7)


def test_u_invariance_of_encoding():
    c = affine_cantor([1 / 3, 1 / 3])
    for u in (0.4, CANTOR_DIM, 1.5):
        fam = PotentialFamily.from_probabilities(c, (0.3, 0.7), u)
        for e, p in zip(c.edges, (0.3, 0.7)):
            assert float(fam.f(c, e.id, np.array([0.5]))[0]) == pytest.approx(math.log(p), rel=1e-13)


def test_summability_guard():
    with pytest.raises(DomainError):
        QTWeights.for_system(cf_full(5), PotentialFamily.zero(1.0), 0.0, 0.5)
    assert QTWeights.for_system(cf_full(5), PotentialFamily.zero(1.0), 0.0, 0.5001).exponent == 0.5001
    with pytest.raises(DomainError):
        QTWeights.for_system(affine_cantor([0.3, 0.3]), PotentialFamily.zero(1.0), -1.0, 0.5)


def test_u_must_exceed_theta():
    with pytest.raises(DomainError):
        check_family(cf_full(5), PotentialFamily.zero(0.5))


def test_theta_values():
    assert finiteness_parameter(cf_full(10)) == 0.5
    assert finiteness_parameter(affine_cantor([0.3, 0.3])) == 0.0


def test_sup_norm():
    fam = PotentialFamily.constants({1: 0.1, 2: -0.3}, 1.0)
    assert fam.sup_norm(cf_full(2)) == pytest.approx(0.3)
    aff = PotentialFamily("affine", {1: (1.0, 0.0), 2: (0.0, 0.2)}, u=1.0)
    assert aff.sup_norm(cf_full(2)) == pytest.approx(1.0)


def test_bad_kinds():
    with pytest.raises(ParameterError):
        PotentialFamily("wavelet")
    with pytest.raises(ParameterError):
        PotentialFamily("custom")
    with pytest.raises(ParameterError):
        PotentialFamily.from_probabilities(cf_full(2), (0.5, 0.5), 1.0)
