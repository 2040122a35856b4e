"""Families of probability measures satisfying the consistency condition, and their builders.

The consistency condition at x reads

    (1/mu(x)) sum_{y in phi^{-1}(x)} mu(y) P(y, {t}) = t P(x, {t})   for every t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import mpmath
from mpmath import mpf

from ..errors import (
    ConditionIBViolated,
    ConditionICViolated,
    ConditionIDViolated,
    MonotonicityViolated,
    SeedViolatesI10,
    ThetaOutOfRange,
)
from ..graph import Branch, Circuit, GraphShape, Vertex, parse_vertex, preimage
from ..measures import AtomicMeasure, combine, dirac, inf_support, integrate, moment, reweight, total_mass
from ..moments import MomentSequence
from ..precision import to_json_number
from .derivatives import h_n
from .model import WeightedGraphModel

INF = math.inf
CC_TOL = 1e-10
ONE = mpf(1)


@dataclass(frozen=True)
class CCFamily:
    P: Mapping
    tol: float = CC_TOL

    def __post_init__(self):
        for v, m in self.P.items():
            val, err = total_mass(m)
            if abs(val - 1) > self.tol + err:
                raise ValueError(f"P({v}) has total mass {val}, not 1")

    def to_dict(self) -> dict:
        return {"tol": self.tol, "members": [[str(v), self.P[v].to_dict()] for v in sorted(self.P)]}

    @classmethod
    def from_dict(cls, d) -> "CCFamily":
        return cls({parse_vertex(v): AtomicMeasure.from_dict(m) for v, m in d["members"]}, d.get("tol", CC_TOL))


@dataclass(frozen=True)
class CCVerification:
    max_residual: mpf
    failing_vertex: Optional[Vertex]
    passed: bool
    checked: int
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "max_residual": float(self.max_residual),
            "failing_vertex": None if self.failing_vertex is None else str(self.failing_vertex),
            "passed": self.passed,
            "checked_vertices": self.checked,
            "notes": list(self.notes),
        }


def verify_cc(model: WeightedGraphModel, family: CCFamily, tol: float = CC_TOL) -> CCVerification:
    """Largest normalized residual of the consistency condition over the truncated shape."""
    worst = mpf(0)
    worst_v = None
    checked = 0
    notes = []
    for x in model.shape.vertices():
        if x not in family.P:
            continue
        pre = preimage(model.shape, x)
        if not pre.vertices:
            continue
        members = [y for y in pre.vertices if y in family.P]
        if len(members) < len(pre.vertices):
            continue
        if pre.truncated and x == Circuit(model.kappa):
            notes.append("x_kappa checked over the stored branches only")
        mu_x = model.weight(x)
        lhs: dict = {}
        for y in members:
            wy = model.weight(y)
            for a in family.P[y].atoms:
                lhs[a.location] = lhs.get(a.location, mpf(0)) + wy * a.mass
        Px = family.P[x]
        locs = set(lhs) | {a.location for a in Px.atoms}
        for t in locs:
            rhs = t * Px.mass_at(t)
            res = abs(lhs.get(t, mpf(0)) / mu_x - rhs) / (abs(rhs) + 1)
            if res > worst:
                worst, worst_v = res, x
        checked += 1
    passed = worst <= tol
    return CCVerification(worst, None if passed else worst_v, passed, checked, tuple(notes))


@dataclass(frozen=True)
class SubnormalBuildReport:
    Theta: mpf
    vartheta: mpf
    cc_residual: mpf
    notes: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "Theta": to_json_number(self.Theta),
            "vartheta": to_json_number(self.vartheta),
            "cc_residual": float(self.cc_residual),
            "notes": list(self.notes),
        }


def _inv_gap(kappa: int):
    return lambda t: 1 / (t ** (kappa + 1) - 1)


def _last_location(m: AtomicMeasure) -> mpf:
    return m.atoms[-1].location


def _branch_family(seed: AtomicMeasure, w1: mpf, weights: dict, i: int, depth: int) -> dict:
    """P(x_{i,j}) = (mu(x_{i,1})/mu(x_{i,j})) t^(j-1) P(x_{i,1})."""
    out = {}
    for j in range(1, depth + 1):
        c = w1 / weights[Branch(i, j)]
        out[Branch(i, j)] = seed if j == 1 else reweight(seed, lambda t, c=c, j=j: c * t ** (j - 1), c, j - 1)
    return out


def _circuit_family(mu: dict, kappa: int, vartheta: mpf, mu0: mpf, seeds, weights_1) -> dict:
    """P(x_r) = sum_i (mu_i/mu_r) t^r/(t^(k+1)-1) P_i + vartheta (mu0/mu_r) delta_1."""
    out = {}
    for r in range(kappa + 1):
        mu_r = mu[Circuit(r)]
        terms = []
        for P_i, w in zip(seeds, weights_1):
            L = _last_location(P_i)
            dens = lambda t, r=r: t**r / (t ** (kappa + 1) - 1)
            terms.append((w / mu_r, reweight(P_i, dens, L**r / (L ** (kappa + 1) - 1), 0)))
        if vartheta > 0:
            terms.append((vartheta * mu0 / mu_r, dirac(ONE)))
        out[Circuit(r)] = combine(terms)
    return out


def _check_seed(seed: AtomicMeasure, i: int):
    if inf_support(seed) <= 1:
        raise SeedViolatesI10(f"seed {i} charges [0, 1] (inf support {inf_support(seed)})")


def build_subnormal(
    seeds: Sequence[AtomicMeasure],
    kappa: int,
    mu_seed_weights: Sequence,
    mu_x0=None,
    branch_depth: int = 12,
    eta_tail=None,
    tol: float = CC_TOL,
):
    """Build weights and a consistent family from seed measures P(x_{i,1}).

    With ``eta_tail`` the graph has infinitely many branches; the listed seeds
    are the first ``len(seeds)`` of them.
    """
    if len(seeds) != len(mu_seed_weights) or not seeds:
        raise ValueError("need one weight per seed and at least one seed")
    w = [mpf(x) for x in mu_seed_weights]
    for i, s in enumerate(seeds, 1):
        _check_seed(s, i)
    k = kappa
    gap_int = [integrate(s, _inv_gap(k)) for s in seeds]
    S = mpmath.fsum(wi * g for wi, g in zip(w, gap_int))
    notes = []
    if eta_tail is not None:
        tb = eta_tail.ratio_sum(0, k)
        if tb is None or tb == INF:
            raise ValueError("tail branches make the normalizing sum diverge or undecidable")
        notes.append(f"tail branches contribute at most {mpmath.nstr(mpf(tb), 5)} to the normalizing sum")
    mu0 = 2 * S if mu_x0 is None else mpf(mu_x0)
    Theta = S / mu0
    if Theta > 1:
        raise ThetaOutOfRange(f"Theta = {Theta} > 1 for mu(x_0) = {mu0}")
    vartheta = 1 - Theta
    terms = []
    for s, wi in zip(seeds, w):
        L = _last_location(s)
        terms.append((wi / mu0, reweight(s, _inv_gap(k), 1 / (L ** (k + 1) - 1), 0)))
    if vartheta > 0:
        terms.append((vartheta, dirac(ONE)))
    P0 = combine(terms)
    mu = {Circuit(0): mu0}
    for r in range(1, k + 1):
        mu[Circuit(r)] = mu0 * moment(P0, r).value
    for i, (s, wi) in enumerate(zip(seeds, w), 1):
        for j in range(1, branch_depth + 1):
            mu[Branch(i, j)] = wi * moment(s, j - 1).value
    P = {}
    for r in range(k + 1):
        c = mu0 / mu[Circuit(r)]
        P[Circuit(r)] = P0 if r == 0 else reweight(P0, lambda t, c=c, r=r: c * t**r, c, r)
    for i, (s, wi) in enumerate(zip(seeds, w), 1):
        P.update(_branch_family(s, wi, mu, i, branch_depth))
    eta = INF if eta_tail is not None else len(seeds)
    shape = GraphShape(eta, k, branch_depth, len(seeds))
    model = WeightedGraphModel(
        shape, mu, {i: s for i, s in enumerate(seeds, 1)}, eta_tail,
        metadata={"builder": "build_subnormal"},
    )
    family = CCFamily(P, tol)
    ver = verify_cc(model, family, tol)
    return model, family, SubnormalBuildReport(Theta, vartheta, ver.max_residual, tuple(notes + list(ver.notes)))


@dataclass(frozen=True)
class ExtensionReport:
    vartheta: mpf
    ib_defect: mpf
    ic_defects: tuple
    id_sum: mpf
    cc_residual: mpf
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "vartheta": to_json_number(self.vartheta),
            "ib_defect": float(self.ib_defect),
            "ic_defects": [float(x) for x in self.ic_defects],
            "id_sum": to_json_number(self.id_sum),
            "cc_residual": float(self.cc_residual),
            "notes": list(self.notes),
        }


def extension_conditions(model: WeightedGraphModel, seeds: Mapping[int, AtomicMeasure], depth: int = 12):
    """Measured gaps in the three extendibility conditions.

    Returns (ib, ic, id_sum): the worst relative mismatch between seed moments
    and h_n(x_{i,1}); the defects of the kappa linear identities; and
    sum_i (mu(x_{i,1})/mu(x_0)) int (t^(k+1) - 1)^-1 dP_i, which must not exceed 1.
    """
    k = model.kappa
    mu0 = model.weight(Circuit(0))
    ib = mpf(0)
    for i in model.shape.branches:
        s = seeds[i]
        if inf_support(s) <= 1:
            ib = mpmath.inf
            continue
        for n in range(depth + 1):
            try:
                h = h_n(model, Branch(i, 1), n).value
            except Exception:
                break
            m = moment(s, n).value
            ib = max(ib, abs(m - h) / abs(h))
    ic = []
    for r in range(1, k + 1):
        mu_r = model.weight(Circuit(r))
        acc = mu0 / mu_r
        for i in model.shape.branches:
            wi = model.weight(Branch(i, 1))
            acc += wi / mu_r * integrate(seeds[i], lambda t, r=r: (t**r - 1) / (t ** (k + 1) - 1))
        ic.append(acc - 1)
    id_sum = mpmath.fsum(
        model.weight(Branch(i, 1)) / mu0 * integrate(seeds[i], _inv_gap(k)) for i in model.shape.branches
    )
    return ib, tuple(ic), id_sum


def extend_cc(model: WeightedGraphModel, seeds: Mapping[int, AtomicMeasure], tol: float = CC_TOL, depth: int = 12):
    """Extend seeds P(x_{i,1}) to a consistent family on the whole graph, if the conditions allow."""
    k = model.kappa
    ib, ic, id_sum = extension_conditions(model, seeds, depth)
    if ib > 1e-9:
        raise ConditionIBViolated(f"seed moments differ from h_n(x_i1) by {ib}", ib)
    bad = [x for x in ic if abs(x) > 1e-9]
    if bad:
        raise ConditionICViolated(f"circuit identities fail by {bad}", max(abs(x) for x in bad))
    if id_sum > 1 + tol:
        raise ConditionIDViolated(f"normalizing sum {id_sum} exceeds 1", id_sum - 1)
    vartheta = max(1 - id_sum, mpf(0))
    mu0 = model.weight(Circuit(0))
    mu = {Circuit(r): model.weight(Circuit(r)) for r in range(k + 1)}
    branches = list(model.shape.branches)
    seed_list = [seeds[i] for i in branches]
    w1 = [model.weight(Branch(i, 1)) for i in branches]
    P = _circuit_family(mu, k, vartheta, mu0, seed_list, w1)
    weights = {}
    for i in branches:
        for j in range(1, model.shape.branch_depth + 1):
            weights[Branch(i, j)] = model.weight(Branch(i, j))
    for i, s, w in zip(branches, seed_list, w1):
        P.update(_branch_family(s, w, weights, i, model.shape.branch_depth))
    family = CCFamily(P, tol)
    ver = verify_cc(model, family, tol)
    notes = list(ver.notes)
    if model.shape.infinite:
        notes.append("branches beyond eta_cap are not represented in the family")
    return family, ExtensionReport(vartheta, ib, ic, id_sum, ver.max_residual, tuple(notes))


def build_from_target_h0(gamma: MomentSequence, kappa: int, mu_x0=1) -> WeightedGraphModel:
    """Single-branch model whose x_0 derivatives reproduce ``gamma``."""
    g = gamma.values
    mu0 = mpf(mu_x0)
    if g[0] != 1:
        raise ValueError("gamma_0 must be 1")
    if any(not v > 0 for v in g):
        raise ValueError("gamma must be positive")
    N = gamma.N
    if N < kappa + 1:
        raise ValueError("sequence too short for this kappa")
    mu = {Circuit(r): mu0 * g[r] for r in range(kappa + 1)}
    depth = N - kappa
    for n in range(depth):
        d = g[n + kappa + 1] - g[n]
        if not d > 0:
            raise MonotonicityViolated(f"gamma_{n + kappa + 1} - gamma_{n} = {d} is not positive")
        mu[Branch(1, n + 1)] = mu0 * d
    model = WeightedGraphModel(GraphShape(1, kappa, depth), mu, metadata={"builder": "build_from_target_h0"})
    for n in range(N + 1):
        h = h_n(model, Circuit(0), n).value
        if abs(h - g[n]) > 1e-10 * abs(g[n]):
            raise AssertionError(f"h_{n}(x_0) = {h} differs from gamma_{n} = {g[n]}")
    return model
