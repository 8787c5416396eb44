import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfa.errors import DomainError, StructureError
from mfa.gdms import affine_cantor, cf_full, cf_no_one, custom_system, estimate_distortion_constant
from mfa.potentials import PotentialFamily, finiteness_parameter
from mfa.pressure import (PartitionTable, barycentric_matrix, chebyshev_nodes, check_cofinite_regularity,
                          partition_sum, power_iteration, pressure_bracket, pressure_collocation)

CANTOR = affine_cantor([1 / 3, 1 / 3])
CF10 = cf_full(10)
SYSTEMS = {
    "cantor": (CANTOR, [PotentialFamily.zero(1.0),
                        PotentialFamily.constants({1: 0.3, 2: -0.5}, 0.7)]),
    "cf10": (CF10, [PotentialFamily.zero(1.0),
                    PotentialFamily.constants({n: 0.2 * math.sin(n) for n in range(1, 11)}, 0.8)]),
}
CASES = [(name, i) for name in SYSTEMS for i in range(2)]


def P(system, fam, q, t):
    return pressure_collocation(system, fam, q, t).value


class TestPartitionSums:
    def test_cantor_closed_form(self):
        fam = PotentialFamily.zero(1.0)
        for n in (1, 2, 5):
            zi, zs = partition_sum(CANTOR, fam, 0.0, 0.8, n)
            assert zs == pytest.approx(2 ** n * 3 ** (-0.8 * n), rel=1e-12)
            assert zi == pytest.approx(zs, rel=1e-12)

    def test_cf12_ratio(self):
        s = cf_full(2)
        # t = 1/2 is the parent theta, where the guard rejects the pair
        zi, zs = partition_sum(s, PotentialFamily.zero(1.0), 0.0, 0.55, 2)
        assert zi <= zs <= zi * estimate_distortion_constant(s) ** 0.55

    def test_submultiplicative(self):
        s = cf_full(3)
        fam = PotentialFamily.constants({1: 0.1, 2: 0.0, 3: -0.2}, 1.0)
        table = PartitionTable(s, fam, 12, domain="full")
        for m in range(1, 7):
            for n in range(1, 7):
                assert table.log_z(1.0, 0.1, m + n)[1] <= table.log_z(1.0, 0.1, m)[1] + table.log_z(1.0, 0.1, n)[1] + 1e-12


class TestBracket:
    def test_cantor_exact(self):
        est = pressure_bracket(CANTOR, PotentialFamily.zero(1.0), 0.0, 0.4, n_max=1)
        assert est.bracket_width == 0
        assert est.value == pytest.approx(math.log(2 * 3 ** -0.4), abs=1e-15)

    def test_cf12_contains_collocation(self):
        s = cf_full(2)
        fam = PotentialFamily.zero(1.0)
        est = pressure_bracket(s, fam, 0.0, 0.53, n_max=16)
        col = P(s, fam, 0.0, 0.53)
        assert est.lower <= col <= est.upper
        assert est.bracket_width < 0.03

    def test_monotone_sequences(self):
        s = cf_full(2)
        est = pressure_bracket(s, PotentialFamily.zero(1.0), 0.0, 0.55, n_max=12)
        up, lo = est.diagnostics["upper_seq"], est.diagnostics["lower_seq"]
        assert all(b <= a + 1e-15 for a, b in zip(up, up[1:]))
        assert all(b >= a - 1e-15 for a, b in zip(lo, lo[1:]))

    def test_not_full_shift(self):
        s = custom_system([(0, 0, 1)], [(1, 0, 0, "affine", (0.5, 0)), (2, 0, 0, "affine", (0.5, 0.5))],
                          incidence=[[1, 1], [1, 0]])
        with pytest.raises(StructureError):
            pressure_bracket(s, PotentialFamily.zero(1.0), 0.0, 0.5, n_max=4)

    @pytest.mark.parametrize("name,i", CASES)
    def test_containment(self, name, i):
        system, fams = SYSTEMS[name]
        fam = fams[i]
        for q, t in ((1.0, 0.0), (0.5, 0.4)):
            est = pressure_bracket(system, fam, q, t, n_max=6 if name == "cf10" else 10)
            assert est.lower - 1e-12 <= P(system, fam, q, t) <= est.upper + 1e-12


class TestCollocation:
    @pytest.mark.parametrize("M", [1, 4, 32])
    def test_cantor_eigenvalue(self, M):
        for t in (0.2, 0.63, 1.5):
            est = pressure_collocation(CANTOR, PotentialFamily.zero(1.0), 0.0, t, M=M)
            assert est.value == pytest.approx(math.log(2 * 3 ** -t), abs=1e-13)

    def test_cf12_near_root(self):
        s = cf_full(2)
        fam = PotentialFamily.zero(1.0)
        a = P(s, fam, 0.0, 0.5312805)
        b = pressure_collocation(s, fam, 0.0, 0.5312805, M=48).value
        c = pressure_collocation(s, fam, 0.0, 0.5312805, M=32).value
        assert abs(a) < 1e-6 and abs(b - c) <= 1e-8
        assert P(s, fam, 0.0, 0.54) < a < P(s, fam, 0.0, 0.52)

    def test_multivertex_matches_partition(self):
        s = custom_system([(0, 0, 1), (1, 2, 3)],
                          [(1, 0, 1, "affine", (0.4, -0.8)), (2, 1, 0, "affine", (0.4, 2.1)),
                           (3, 0, 0, "affine", (0.3, 0.6))])
        # edge-constant affine: the operator reduces to the vertex matrix of ratios**t
        V = np.array([[0.3 ** 0.7, 0.4 ** 0.7], [0.4 ** 0.7, 0.0]])
        expected = math.log(max(np.linalg.eigvals(V).real))
        assert P(s, PotentialFamily.zero(1.0), 0.0, 0.7) == pytest.approx(expected, abs=1e-12)

    def test_nodes_and_interpolation(self):
        x = chebyshev_nodes(0.0, 2.0, 16)
        assert x.min() >= 0 and x.max() <= 2
        z = np.linspace(0, 2, 7)
        B = barycentric_matrix(x, z)
        np.testing.assert_allclose(B @ np.cos(x), np.cos(z), atol=1e-12)

    def test_power_iteration(self):
        A = np.array([[2.0, 1.0], [1.0, 3.0]])
        lam, v, res = power_iteration(A)
        assert lam == pytest.approx(max(np.linalg.eigvalsh(A)))
        assert res < 1e-10


class TestPressureProperties:
    @pytest.mark.parametrize("name,i", CASES)
    def test_strict_decrease_and_convexity(self, name, i):
        system, fams = SYSTEMS[name]
        fam = fams[i]
        theta = finiteness_parameter(system)
        for q in (-0.5, 0.0, 1.0, 2.0):
            start = theta - q * fam.u + 0.05
            ts = start + np.linspace(0, 2, 21)
            vals = np.array([P(system, fam, q, t) for t in ts])
            assert np.all(np.diff(vals) < -1e-9)
            assert np.all(vals[2:] - 2 * vals[1:-1] + vals[:-2] >= -1e-8)

    @pytest.mark.parametrize("name,i", CASES)
    def test_inequality(self, name, i):
        system, fams = SYSTEMS[name]
        fam = fams[i]
        geo = PotentialFamily.zero(fam.u)
        norm = fam.sup_norm(system)
        theta = finiteness_parameter(system)
        for q in (-1.0, 0.5, 2.0):
            for s in (theta + 0.1, theta + 0.7, theta + 2.0):
                t = s - q * fam.u
                diff = P(system, fam, q, t) - P(system, geo, 0.0, s)
                assert abs(diff) <= abs(q) * norm + 1e-10

    @pytest.mark.parametrize("name,i", CASES)
    def test_monotone_in_q_and_t(self, name, i):
        # P(q2,t2) <= P(q1,t1) + (q2-q1)*sup Psi + (exponent change)*log s for q2 >= q1
        # and a nonnegative exponent change; s is the effective contraction
        system, fams = SYSTEMS[name]
        fam = fams[i]
        log_s = math.log(system.contraction)
        sup_psi = fam.psi_range(system)[1]
        theta = finiteness_parameter(system)
        pts = [(q, theta - q * fam.u + d) for q in (0.0, 0.5, 1.0) for d in (0.2, 0.6, 1.2)]
        checked = 0
        for q1, t1 in pts:
            for q2, t2 in pts:
                de = (q2 - q1) * fam.u + (t2 - t1)
                if q2 < q1 or de < 0:
                    continue
                bound = (q2 - q1) * sup_psi + de * log_s
                assert P(system, fam, q2, t2) <= P(system, fam, q1, t1) + bound + 1e-8
                checked += 1
        assert checked > 10

    @pytest.mark.parametrize("name,i", CASES)
    def test_domain_guard(self, name, i):
        system, fams = SYSTEMS[name]
        fam = fams[i]
        theta = finiteness_parameter(system)
        with pytest.raises(DomainError):
            pressure_collocation(system, fam, 1.0, theta - fam.u)
        with pytest.raises(DomainError):
            pressure_collocation(system, fam, 2.0, theta - 2 * fam.u - 0.3)

    def test_limits(self):
        for s in (CANTOR, CF10):
            assert P(s, PotentialFamily.zero(1.0), 0.0, 6.0) < -1
        # near theta the truncated pressure grows with N; it is bounded by log N
        fam = PotentialFamily.zero(1.0)
        near = [P(cf_full(N), fam, 0.0, 0.5 + 1e-3) for N in (10, 50)]
        assert near[0] < near[1] <= math.log(50)
        assert near[1] > 1.0


class TestCofinite:
    def test_builtins(self):
        assert check_cofinite_regularity(cf_full(20))[0] == "yes"
        assert check_cofinite_regularity(cf_no_one(20))[0] == "yes"
        assert check_cofinite_regularity(CANTOR)[0] == "yes"

    def test_log_tail(self):
        s = custom_system([(0, 0, 1)], [(n, 0, 0, "moebius", (0, 1, 1, n)) for n in range(1, 4)],
                          tail_model={"gamma": 2.0, "log_power": 4.0, "accumulation": 0.0})
        assert check_cofinite_regularity(s)[0] == "no"


@settings(max_examples=25, deadline=None)
@given(q=st.floats(-1.0, 2.0), d=st.floats(0.05, 2.0))
def test_cantor_closed_form_pressure(q, d):
    fam = PotentialFamily.constants({1: 0.3, 2: -0.5}, 0.7)
    t = d - q * 0.7
    expected = math.log(math.exp(0.3 * q) * 3 ** -d + math.exp(-0.5 * q) * 3 ** -d)
    assert P(CANTOR, fam, q, t) == pytest.approx(expected, abs=1e-12)
