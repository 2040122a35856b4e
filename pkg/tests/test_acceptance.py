"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, collected in the terminal summary.
"""

import random
import time

import mpmath
from mpmath import mpf

from fixture_models import (
    delta_two,
    example_final_model,
    fixture_models,
    three_seed_kappa_two,
    two_seed_kappa_one,
)
from onecircuit.comp_op import (
    HYPONORMAL,
    NOT_HYPONORMAL,
    dif1_residual,
    extend_cc,
    h_n,
    h_n_xkappa_direct,
    hyponormality,
    norm_bound,
    verify_cc,
)
from onecircuit.comp_op.diagnostics import h_sequence
from onecircuit.exotic import Partition, canonical_partitions, exotic_pipeline, lambda_functional
from onecircuit.graph import INF, Branch, Circuit, GraphShape, iterated_preimage_bfs, iterated_preimage_xkappa_closed
from onecircuit.measures import Homothety, moment, total_mass
from onecircuit.moments import (
    NOT_STIELTJES,
    S_DETERMINATE,
    S_INDETERMINATE,
    STIELTJES,
    MomentSequence,
    hankel_report,
    shift_dominance,
    classify_shifted,
    transform_T,
)
from onecircuit.precision import precision
from onecircuit.qspecial import (
    QPair,
    asc_beta_measure,
    asc_gamma_measure,
    asc_moment,
    euler_predicate,
    euler_threshold,
    pentagonal_margin,
    quartic_pair,
)


def rel(x, y):
    return abs(x - y) / abs(y)


def test_ac1_preimage_oracles(acceptance):
    t0 = time.perf_counter()
    mismatches = 0
    for eta in (1, 2, 3):
        for kappa in (0, 1, 2):
            shape = GraphShape(eta, kappa, 32)
            for n in range(31):
                a = iterated_preimage_xkappa_closed(shape, n)
                b = iterated_preimage_bfs(shape, Circuit(kappa), n)
                mismatches += a.vertices != b.vertices
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 1
    acceptance(1, ok, f"closed form vs BFS preimages: {mismatches} mismatches, {elapsed:.3f} s")
    assert ok


def test_ac2_h_table_duality(acceptance):
    models = fixture_models()
    worst_dual = worst_dif1 = mpf(0)
    for m in models.values():
        k = m.kappa
        for n in range(21):
            a = h_n(m, Circuit(k), n).value
            worst_dual = max(worst_dual, rel(h_n_xkappa_direct(m, n).value, a))
        for n in range(16):
            worst_dif1 = max(worst_dif1, abs(dif1_residual(m, n).value))
    ok = len(models) >= 5 and worst_dual <= 1e-10 and worst_dif1 <= 1e-10
    acceptance(2, ok, f"{len(models)} models, recurrence/direct rel {float(worst_dual):.1e}, dif1 {float(worst_dif1):.1e}")
    assert ok


def test_ac3_cc_soundness(acceptance):
    worst_cc = worst_mom = mpf(0)
    for builder in (delta_two, two_seed_kappa_one, three_seed_kappa_two):
        model, family, _ = builder()
        fam2, _ = extend_cc(model, model.seeds)
        for fam in (family, fam2):
            ver = verify_cc(model, fam)
            worst_cc = max(worst_cc, ver.max_residual)
            for v in model.shape.vertices(4):
                for n in range(13):
                    h = h_n(model, v, n).value
                    worst_mom = max(worst_mom, rel(moment(fam.P[v], n).value, h))
    ok = worst_cc <= 1e-10 and worst_mom <= 1e-9
    acceptance(3, ok, f"max CC residual {float(worst_cc):.1e}, P-moment vs h rel {float(worst_mom):.1e}")
    assert ok


def test_ac4_asc_moments(acceptance):
    worst = worst_bg = worst_m1 = mpf(0)
    combos = 0
    for a in (0.3, 0.5, 0.9, 2):
        for q in (0.2, 0.3, 0.5):
            if not a * q < 1:
                continue
            combos += 1
            p = QPair(a, q)
            beta = asc_beta_measure(p)
            for n in range(13):
                worst = max(worst, rel(moment(beta, n).value, asc_moment(p, n)))
            m1 = moment(beta, 1)
            worst_m1 = max(worst_m1, max(abs(m1.value - (1 + mpf(a))) - m1.error, 0))
            if 1 < a < 1 / q:
                gamma = asc_gamma_measure(p)
                for n in range(13):
                    worst_bg = max(worst_bg, rel(moment(gamma, n).value, moment(beta, n).value))
    ok = worst <= 1e-10 and worst_bg <= 1e-9 and worst_m1 <= mpf(10) ** -40
    acceptance(4, ok, f"{combos} (a,q) combos, closed form rel {float(worst):.1e}, beta/gamma rel {float(worst_bg):.1e}")
    assert ok


def test_ac5_quartic_constants(acceptance):
    t0 = time.perf_counter()
    zeta, rho = quartic_pair()
    K0 = mpmath.gamma(mpf(1) / 4) ** 2 / (4 * mpmath.sqrt(mpmath.pi))
    z0 = zeta.mass_at(mpf(0))
    err = rel(z0, mpmath.pi / K0**2)
    masses_ok = all(abs(total_mass(m).value - 1) <= total_mass(m).error + mpf(10) ** -50 for m in (zeta, rho))
    beta1 = rho.atoms[0].mass / (1 - z0)
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-12 and masses_ok and beta1 > mpf(23) / 2 and elapsed < 1
    acceptance(5, ok, f"zeta(0) rel {float(err):.1e}, beta(theta1) = {mpmath.nstr(beta1, 8)}, {elapsed:.3f} s")
    assert ok


def test_ac6_euler_lemma(acceptance):
    q0 = euler_threshold(2)
    pred = euler_predicate(2, q0 / 2)
    qs = [mpf(k) / 200 for k in range(1, 101)]
    pent_ok = all(pentagonal_margin(q) > 0 for q in qs)
    ok = q0 > 0 and pred > 0 and pent_ok
    acceptance(6, ok, f"q0 = {mpmath.nstr(q0, 6)}, predicate at q0/2 = {mpmath.nstr(pred, 6)}, pentagonal on {len(qs)} points")
    assert ok


def test_ac7_exotic_pipeline(acceptance):
    with precision("high"):
        t0 = time.perf_counter()
        res = exotic_pipeline(2, "quartic")
        res1 = exotic_pipeline(1, "quartic")
        m, d = res.model, res.diagnostics
        nu1 = res.nu.mass_at(mpf(1))
        xi_err = abs(d.xi + nu1) / nu1
        margin = d.x0_test_left - d.x0_test_right
        hyp = hyponormality(m)
        orders = {}
        for v in [Circuit(0)] + [Branch(i, 1) for i in m.shape.branches]:
            rep = hankel_report(h_sequence(m, v, 10))
            orders[str(v)] = (rep.verdict, rep.max_passing_order)
        expected = nu1 * m.weight(Circuit(m.kappa)) / m.weight(Circuit(0))
        id_err = abs(d.id_defect - expected)
        hyp1 = hyponormality(res1.model).verdict
        elapsed = time.perf_counter() - t0
    hankel_ok = all(verdict == STIELTJES and order >= 4 for verdict, order in orders.values())
    ok = (
        xi_err <= 1e-10
        and margin > 0
        and hyp.verdict == NOT_HYPONORMAL
        and hankel_ok
        and id_err <= 1e-9
        and hyp1 == HYPONORMAL
        and elapsed < 10
    )
    acceptance(
        7, ok,
        f"xi rel {float(xi_err):.1e}, x0 test margin {mpmath.nstr(margin, 6)}, Hankel {hankel_ok}, "
        f"identity defect err {float(id_err):.1e}, eta=1 {hyp1}, {elapsed:.2f} s",
    )
    assert ok


def test_ac8_example_final(acceptance):
    m = example_final_model()
    nb = norm_bound(m)
    ratios = [h_n(m, Branch(1, j), 1).value for j in range(1, 36)]
    bounded = mpmath.isfinite(nb.sup_value) and abs(ratios[-1] - 2) < 1e-9
    g = MomentSequence(tuple(h_n(m, Circuit(0), n).value for n in range(11)))
    sd = shift_dominance(g)
    det = sd.differences.orders[1].det_base if sd.differences is not None else None
    target = mpf("-0.2734375")
    fails_at_1 = not sd.passed and sd.failing_sequence == "differences" and sd.failing_order == 1
    det_ok = det is not None and abs(det - target) <= 1e-12
    ok = bounded and fails_at_1 and det_ok
    acceptance(
        8, ok,
        f"norm {mpmath.nstr(nb.sup_value, 6)}, ratio -> {mpmath.nstr(ratios[-1], 10)}, "
        f"difference-Hankel fails at order {sd.failing_order} with det {mpmath.nstr(det, 12)} (expected {target})",
    )
    assert bounded and fails_at_1
    assert det_ok


def test_ac9_lambda_bounds(acceptance):
    with precision("high"):
        tau = exotic_pipeline(2, "quartic").tau
        n = len(tau.atoms)
        triv = lambda_functional(tau, Partition((tuple(range(n)),), 0))
        single = lambda_functional(tau, canonical_partitions(tau, INF))
        monotone = True
        mixed = []
        for eta in (2, 3, 4):
            vals = [lambda_functional(tau, canonical_partitions(tau, eta, k)) for k in range(1, 9)]
            monotone &= all(a.value >= b.value for a, b in zip(vals, vals[1:]))
            mixed += vals
        for eta in (2, 3, 4, 5):
            mixed.append(lambda_functional(tau, canonical_partitions(tau, eta)))
        rng = random.Random(7)
        for _ in range(20):
            cuts = sorted(rng.sample(range(1, n), rng.randint(1, 6)))
            bounds = [0] + cuts + [n]
            blocks = tuple(tuple(range(a, b)) for a, b in zip(bounds, bounds[1:]))
            if all(len(b) == 1 for b in blocks):
                continue
            mixed.append(lambda_functional(tau, Partition(blocks, len(blocks) - 1)))
    min_gap = min(r.sup_bound - r.value for r in mixed)
    inf_exact = triv.value == triv.inf_bound
    sup_err = abs(single.value - single.sup_bound) / single.sup_bound
    ok = inf_exact and sup_err <= 1e-10 and monotone and min_gap > 0
    acceptance(9, ok, f"trivial = inf {inf_exact}, singletons rel {float(sup_err):.1e}, monotone {monotone}, "
                      f"min gap to sup over {len(mixed)} mixed partitions {mpmath.nstr(min_gap, 4)}")
    assert ok


def test_ac10_transform_group(acceptance):
    rng = random.Random(2024)
    worst = mpf(0)
    for _ in range(100):
        g = MomentSequence(tuple(mpf(rng.uniform(-10, 10)) for _ in range(12)))
        h1 = Homothety(mpf(rng.uniform(0.2, 3)), mpf(rng.uniform(-2, 2)))
        h2 = Homothety(mpf(rng.uniform(0.2, 3)), mpf(rng.uniform(-2, 2)))
        lhs = transform_T(transform_T(g, h1), h2).values
        rhs = transform_T(g, h2.compose(h1)).values
        back = transform_T(transform_T(g, h1), h1, "inverse").values
        for x, y in zip(lhs, rhs):
            worst = max(worst, abs(x - y) / max(abs(y), 1))
        for x, y in zip(back, g.values):
            worst = max(worst, abs(x - y) / max(abs(y), 1))
    s = mpf(2)
    verdicts = (
        classify_shifted(s, Homothety(2, 0)),
        classify_shifted(s, Homothety(1, -s)),
        classify_shifted(s, Homothety(1, -2 * s)),
    )
    ok = worst <= 1e-10 and verdicts == (S_INDETERMINATE, S_DETERMINATE, NOT_STIELTJES)
    acceptance(10, ok, f"group law / inverse worst rel {float(worst):.1e} on 100 sequences, shifted verdicts {verdicts}")
    assert ok
