import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from fixture_models import (
    delta_two,
    example_final_gamma,
    example_final_model,
    fixture_models,
    powers_of_two_model,
    staircase,
    three_seed_kappa_two,
    two_seed_kappa_one,
)
from onecircuit.comp_op import (
    DENSE,
    HYPONORMAL,
    NOT_DENSE,
    NOT_HYPONORMAL,
    CCFamily,
    WeightedGraphModel,
    build_from_target_h0,
    build_subnormal,
    conditional_expectation,
    derivative_table,
    dif1_residual,
    extend_cc,
    h_n,
    h_n_xkappa_direct,
    h_phi,
    hyponormality,
    norm_bound,
    power_density,
    preimage_mass_xkappa,
    subnormality_evidence,
    verify_cc,
)
from onecircuit.errors import MonotonicityViolated, SeedViolatesI10, ThetaOutOfRange
from onecircuit.graph import Branch, Circuit, GraphShape
from onecircuit.measures import AtomicMeasure, dirac, moment, total_mass
from onecircuit.moments import NOT_HAMBURGER, STIELTJES, MomentSequence, hankel_report

MODELS = fixture_models()


def test_example_final_h_phi():
    m = example_final_model()
    h = h_phi(m)
    assert h[Circuit(0)] == mpf("1.25")
    assert all(v > 0 for v in h.values())
    ratios = [h_n(m, Branch(1, j), 1).value for j in range(1, 30)]
    assert abs(ratios[-1] - 2) < 1e-6
    assert all(abs(r - 2) >= abs(s - 2) for r, s in zip(ratios, ratios[1:]))


def test_example_final_reproduces_gamma():
    m = example_final_model()
    g = example_final_gamma()
    for n in range(11):
        assert h_n(m, Circuit(0), n).value == g[n]


@pytest.mark.parametrize("name", sorted(MODELS))
def test_h_zero_is_one(name):
    m = MODELS[name]
    for v in m.shape.vertices(3):
        assert h_n(m, v, 0).value == 1


def test_circuit_step_identity():
    m = three_seed_kappa_two()[0]
    for r in (1, 2):
        for n in range(8):
            lhs = h_n(m, Circuit(r - 1), n + 1).value
            rhs = m.weight(Circuit(r)) / m.weight(Circuit(r - 1)) * h_n(m, Circuit(r), n).value
            assert abs(lhs - rhs) <= mpf(10) ** -45 * lhs


@pytest.mark.parametrize("name", sorted(MODELS))
def test_recurrence_matches_direct_sum(name):
    m = MODELS[name]
    k = m.kappa
    for n in range(21):
        a = h_n(m, Circuit(k), n).value
        b = h_n_xkappa_direct(m, n).value
        assert abs(a - b) <= 1e-10 * a


@pytest.mark.parametrize("name", sorted(MODELS))
def test_dif1_identity(name):
    m = MODELS[name]
    for n in range(16):
        r = dif1_residual(m, n)
        scale = h_n(m, Circuit(0), n + m.kappa + 1).value
        assert abs(r.value) <= r.error + mpf(10) ** -40 * scale


def test_direct_sum_matches_preimage_mass():
    m = powers_of_two_model(1)
    mu_k = m.weight(Circuit(1))
    for n in range(0, 20, 2):
        assert abs(preimage_mass_xkappa(m, n) / mu_k - h_n_xkappa_direct(m, n).value) < mpf(10) ** -40 * 2**n


def test_branch_derivative_is_single_preimage_weight():
    m = two_seed_kappa_one()[0]
    for j in range(1, 5):
        for n in range(6):
            u = Branch(2, j)
            assert abs(m.weight(u) * h_n(m, u, n).value - m.weight(Branch(2, j + n))) < mpf(10) ** -45 * m.weight(Branch(2, j + n))


def test_norm_bound_examples():
    nb = norm_bound(example_final_model())
    assert nb.sup_value == mpf("3.5")
    assert nb.attained_at == Branch(1, 1)
    model = delta_two()[0]
    for j in range(1, 8):
        assert h_n(model, Branch(1, j), 1).value == 2
    assert norm_bound(model).sup_value == 2


def test_power_density_staircase():
    for n in (1, 2, 3):
        model = staircase(n)[0]
        assert power_density(model, n).verdict == DENSE
        assert power_density(model, n + 1).verdict == NOT_DENSE


def test_power_density_bounded_seeds():
    model = three_seed_kappa_two()[0]
    assert all(power_density(model, n).verdict == DENSE for n in range(1, 8))


@pytest.mark.parametrize("name", ["delta_two", "two_seed_kappa_one", "three_seed_kappa_two"])
def test_seed_models_hyponormal(name):
    rep = hyponormality(MODELS[name])
    assert rep.verdict == HYPONORMAL
    for v, s in rep.per_vertex_slack.items():
        if isinstance(v, Branch):
            assert s >= -1e-40


def test_example_final_not_hyponormal():
    assert hyponormality(example_final_model()).verdict == NOT_HYPONORMAL


def test_conditional_expectation():
    model = delta_two()[0]
    assert conditional_expectation(model, lambda v: 1, Circuit(0)) == 1
    assert conditional_expectation(model, {Branch(1, 3): 5}, Branch(1, 2)) == 5
    ind = {Branch(1, 1): 1}
    expected = model.weight(Branch(1, 1)) / (model.weight(Circuit(0)) + model.weight(Branch(1, 1)))
    assert conditional_expectation(model, ind, Circuit(0)) == expected


def test_build_subnormal_delta_two():
    model, family, rep = delta_two()
    assert rep.Theta == mpf(1) / 2
    P0 = family.P[Circuit(0)]
    assert P0.locations == [1, 2] and P0.masses == [mpf(1) / 2, mpf(1) / 2]
    for n in range(12):
        assert h_n(model, Circuit(0), n).value == mpf(2) ** n / 2 + mpf(1) / 2
    assert rep.cc_residual == 0


def test_build_subnormal_default_mu0():
    _, _, rep = build_subnormal([dirac(3), dirac(5)], 0, [1, 2])
    assert rep.Theta == mpf(1) / 2


def test_build_subnormal_rejects_bad_input():
    with pytest.raises(SeedViolatesI10):
        build_subnormal([dirac(1)], 0, [1])
    with pytest.raises(ThetaOutOfRange):
        build_subnormal([dirac(2)], 0, [1], mu_x0=mpf(1) / 4)


@pytest.mark.parametrize("builder", [delta_two, two_seed_kappa_one, three_seed_kappa_two])
def test_families_satisfy_cc_and_moments(builder):
    model, family, _ = builder()
    ver = verify_cc(model, family)
    assert ver.passed and ver.max_residual <= 1e-10
    for v in model.shape.vertices(4):
        for n in range(13):
            h = h_n(model, v, n).value
            assert abs(moment(family.P[v], n).value - h) <= 1e-9 * h


def test_perturbed_family_fails_verification():
    model, family, _ = delta_two()
    P0 = family.P[Circuit(0)]
    d = P0.to_dict()
    d["atoms"][0][1] = str(P0.masses[0] * mpf("1.01"))
    d["atoms"][1][1] = str(P0.masses[1] - P0.masses[0] * mpf("0.01"))
    members = dict(family.P)
    members[Circuit(0)] = AtomicMeasure.from_dict(d)
    ver = verify_cc(model, CCFamily(members))
    assert not ver.passed
    assert ver.max_residual >= 1e-3
    assert ver.failing_vertex == Circuit(0)


@pytest.mark.parametrize("builder", [delta_two, two_seed_kappa_one, three_seed_kappa_two])
def test_extend_cc_round_trip(builder):
    model, family, rep = builder()
    fam2, ext = extend_cc(model, model.seeds)
    assert 0 <= ext.vartheta <= 1
    assert abs(ext.vartheta - rep.vartheta) <= 1e-10
    for v, P in family.P.items():
        Q = fam2.P[v]
        assert len(P.atoms) == len(Q.atoms)
        for a, b in zip(P.atoms, Q.atoms):
            assert abs(a.location - b.location) <= 1e-10 * a.location
            assert abs(a.mass - b.mass) <= 1e-10


def test_target_h0_powers_of_two():
    for k in (0, 1, 2):
        m = powers_of_two_model(k)
        for n in range(10):
            assert m.weight(Branch(1, n + 1)) == mpf(2) ** n * (2 ** (k + 1) - 1)
            assert h_n(m, Circuit(0), n).value == mpf(2) ** n


def test_target_h0_affine_is_flagged():
    c = mpf(3)
    m = build_from_target_h0(MomentSequence(tuple(1 + n * c for n in range(12))), 0)
    rep = hankel_report(MomentSequence(tuple(h_n(m, Circuit(0), n).value for n in range(10))))
    assert rep.verdict == NOT_HAMBURGER and rep.failing_order == 1
    assert rep.orders[1].det_base == -c * c


def test_target_h0_monotonicity():
    with pytest.raises(MonotonicityViolated):
        build_from_target_h0(MomentSequence((1, 2, 2, 3)), 0)


def test_evidence_for_subnormal_build():
    ev = subnormality_evidence(delta_two()[0])
    assert ev.flags == {"hankel_all_stieltjes": True, "shift_dominance": True, "carleman_diverging": True}


def test_evidence_for_example_final():
    ev = subnormality_evidence(example_final_model())
    assert not ev.flags["shift_dominance"]
    assert ev.shift_dominance.failing_sequence == "differences"
    assert ev.shift_dominance.failing_order == 1


def test_evidence_for_affine_branch_model():
    c = mpf(2)
    shape = GraphShape(1, 0, 30)
    mu = {Circuit(0): mpf(1), **{Branch(1, j): c for j in range(1, 31)}}
    model = WeightedGraphModel(shape, mu, {1: dirac(1)})
    ev = subnormality_evidence(model)
    assert ev.hankel[Branch(1, 1)].verdict == STIELTJES
    assert ev.hankel[Circuit(0)].verdict == NOT_HAMBURGER


def test_model_json_round_trip():
    for m in MODELS.values():
        back = WeightedGraphModel.from_dict(m.to_dict())
        assert back.shape == m.shape
        assert back.stored() == m.stored()
        for n in range(8):
            assert h_n(back, Circuit(0), n).value == h_n(m, Circuit(0), n).value


def test_derivative_table_flags_cells():
    m = example_final_model()
    table = derivative_table(m, 3, [Branch(1, 39), Branch(1, 40)])
    assert table[(Branch(1, 39), 1)] is not None
    assert table[(Branch(1, 40), 1)] is None


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.tuples(st.integers(9, 40), st.integers(1, 9)), min_size=1, max_size=3, unique_by=lambda x: x[0]),
    st.integers(0, 2),
    st.integers(1, 5),
)
def test_random_seed_builds_are_consistent(pairs, kappa, w):
    seed = AtomicMeasure.from_pairs(sorted((mpf(t) / 8, mpf(m)) for t, m in pairs))
    seed = AtomicMeasure.from_pairs([(a.location, a.mass / total_mass(seed).value) for a in seed.atoms])
    model, family, rep = build_subnormal([seed, dirac(3)], kappa, [w, 1], branch_depth=8)
    assert verify_cc(model, family).passed
    assert hyponormality(model).verdict == HYPONORMAL
    for n in range(12):
        a = h_n(model, Circuit(kappa), n).value
        assert abs(a - h_n_xkappa_direct(model, n).value) <= 1e-10 * a
