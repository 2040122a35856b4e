import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from onecircuit.errors import DivergentProduct, ParameterOutOfRange
from onecircuit.measures import Homothety, inf_support, moment, pushforward, scale_mass, total_mass
from onecircuit.moments import MomentSequence, shift_dominance
from onecircuit.qspecial import (
    QPair,
    asc_beta_measure,
    asc_eval,
    asc_gamma_measure,
    asc_moment,
    asc_orthogonalizable,
    asc_polynomial_table,
    euler_predicate,
    euler_threshold,
    pentagonal_margin,
    q_pochhammer,
    qpoch,
    quartic_K0,
    quartic_pair,
)


def test_q_pochhammer_basics():
    assert qpoch(3, mpf("0.7"), 0) == 1
    assert qpoch(mpf("0.5"), mpf("0.5"), 1) == mpf("0.5")
    with pytest.raises(DivergentProduct):
        q_pochhammer(mpf("0.5"), 1, float("inf"))


def test_infinite_product_stable_across_eps():
    a = q_pochhammer(mpf("0.5"), mpf("0.5"), float("inf"), eps=1e-14)
    b = q_pochhammer(mpf("0.5"), mpf("0.5"), float("inf"), eps=1e-16)
    assert abs(a.value - b.value) <= 1e-12
    assert abs(a.value - b.value) <= a.error + b.error
    # independent oracle: mpmath's q-Pochhammer
    assert abs(b.value - mpmath.qp(mpf("0.5"), mpf("0.5"))) <= b.error + mpf(10) ** -50


def test_asc_recurrence_start():
    p = QPair(0.5, 0.25)
    assert asc_eval(p, 0, 7) == 1
    assert asc_eval(p, 1, 7) == 7 - mpf("1.5")


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(1, 9), st.integers(-50, 50), st.integers(0, 8))
def test_asc_scaling_identity(a10, q10, x10, n):
    a, q, x = mpf(a10) / 10, mpf(q10) / 10, mpf(x10) / 10
    lhs = asc_eval(QPair(a, q), n, x)
    rhs = a**n * asc_eval(QPair(1 / a, q), n, x / a)
    assert abs(lhs - rhs) <= mpf(10) ** -40 * (1 + abs(lhs))


def test_polynomial_table_matches_recurrence():
    p = QPair(0.5, 0.25)
    tab = asc_polynomial_table(p, 5)
    for n, coeffs in enumerate(tab):
        for x in (mpf(0), mpf(2), mpf("3.5")):
            assert abs(mpmath.polyval(coeffs[::-1], x) - asc_eval(p, n, x)) < mpf(10) ** -40 * (1 + abs(asc_eval(p, n, x)))


def test_orthogonalizable_region():
    assert asc_orthogonalizable(0.5, 0.25)
    assert not asc_orthogonalizable(0.5, 2)
    assert asc_orthogonalizable(-1, -0.5)


def test_beta_measure_atoms_and_mass():
    m = asc_beta_measure(QPair(0.5, 0.25))
    assert m.locations[:3] == [1, 4, 16]
    mass = total_mass(m)
    assert abs(mass.value - 1) <= mass.error + mpf(10) ** -50
    assert abs(moment(m, 1).value - mpf("1.5")) <= 1e-12


def test_gamma_measure_atoms_and_moments():
    g = asc_gamma_measure(QPair(2, 0.3))
    assert [float(x) for x in g.locations[:3]] == pytest.approx([2, 2 / 0.3, 2 / 0.09])
    mass = total_mass(g)
    assert abs(mass.value - 1) <= mass.error + mpf(10) ** -50
    b = asc_beta_measure(QPair(2, 0.3))
    for n in range(11):
        x, y = moment(g, n).value, moment(b, n).value
        assert abs(x - y) <= 1e-9 * y


def test_asc_moment_small_orders():
    p = QPair(mpf("0.7"), mpf("0.4"))
    assert asc_moment(p, 0) == 1
    assert abs(asc_moment(p, 1) - mpf("1.7")) < mpf(10) ** -50


def test_beta_rejects_bad_parameters():
    with pytest.raises(ParameterOutOfRange):
        asc_beta_measure(QPair(4, 0.5))
    with pytest.raises(ParameterOutOfRange):
        asc_gamma_measure(QPair(0.5, 0.3))


@pytest.mark.parametrize("a,q", [(0.5, 0.2), (0.5, 0.3), (0.9, 0.5), (0.3, 0.2)])
def test_krein_regime_shift_dominance(a, q):
    m = asc_beta_measure(QPair(a, q))
    assert inf_support(m) == 1
    g = MomentSequence(tuple(moment(m, n).value for n in range(12)))
    assert shift_dominance(g).passed


@pytest.mark.parametrize("a,q", [(2, 0.3), (1.5, 0.2), (3, 0.2)])
def test_inverse_parameter_scaling(a, q):
    a = mpf(a)
    m = pushforward(asc_beta_measure(QPair(1 / a, q)), Homothety(a, 0))
    for n in range(10):
        got = moment(m, n).value
        assert abs(got - a**n * asc_moment(QPair(1 / a, q), n)) <= 1e-40 * got
        assert abs(got - asc_moment(QPair(a, q), n)) <= 1e-9 * got


def test_euler_threshold_for_two():
    rep = euler_threshold(2, report=True)
    assert rep.q0 > 0
    assert euler_predicate(2, rep.q0 / 2) > 0
    assert rep.late_passes == ()
    assert rep.pentagonal_violations == ()


def test_pentagonal_bound():
    assert qpoch(mpf("0.1"), mpf("0.1"), float("inf")) > 1 - mpf("0.1") / mpf("0.9")
    for k in range(1, 51):
        assert pentagonal_margin(mpf(k) / 100) > 0


def test_euler_threshold_needs_a_above_one():
    with pytest.raises(ParameterOutOfRange):
        euler_threshold(0.5)


def test_quartic_constants():
    K0 = quartic_K0()
    # independent route: complete elliptic integral at parameter 1/2
    assert abs(K0 - mpmath.ellipk(mpf(1) / 2)) < mpf(10) ** -50
    zeta, rho = quartic_pair()
    z0 = zeta.mass_at(mpf(0))
    assert 0 < z0 < 1
    assert abs(z0 - mpf("0.913893162088927")) < 1e-14
    for m in (zeta, rho):
        mass = total_mass(m)
        assert abs(mass.value - 1) <= mass.error + mpf(10) ** -50


def test_quartic_moments_agree():
    zeta, rho = quartic_pair()
    for n in range(9):
        x, y = moment(zeta, n).value, moment(rho, n).value
        assert abs(x - y) <= 1e-8 * y


def test_quartic_scaled_first_atom():
    zeta, rho = quartic_pair()
    r = 1 / (1 - zeta.mass_at(mpf(0)))
    beta1 = scale_mass(rho, r).atoms[0].mass
    assert beta1 > mpf(9) / 7
    assert beta1 > mpf(23) / 2
