"""Boundedness, dense definition of powers, hyponormality and subnormality evidence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import mpmath
from mpmath import mpf

from ..errors import EmptyPreimage, TailDegreeExceeded, TruncationExhausted
from ..graph import Branch, Circuit, Vertex, preimage
from ..measures import integrate
from ..moments import (
    TRUNCATION_FLAG,
    MomentSequence,
    carleman_diagnostic,
    hankel_report,
    shift_dominance,
)
from ..precision import to_json_number
from .derivatives import h_n
from .model import WeightedGraphModel, tail_moment_sum

DENSE = "Dense"
NOT_DENSE = "NotDense"
UNKNOWN = "Unknown"
HYPONORMAL = "Hyponormal"
NOT_HYPONORMAL = "NotHyponormal"

UNPROVEN_HYPOTHESES = (
    "the sequence h_{j(kappa+1)}(x_0), j = 0, 1, ..., is an S-determinate Stieltjes moment sequence",
    "for every branch i the sequence h_n(x_{i,1}), n = 0, 1, ..., is an S-determinate Stieltjes moment sequence",
    "finite Hankel sections cannot certify either property; all verdicts below concern the computed prefix",
)


@dataclass(frozen=True)
class NormBound:
    sup_value: mpf
    attained_at: Optional[Vertex]
    truncation_caveat: bool
    skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "sup_value": to_json_number(self.sup_value),
            "attained_at": None if self.attained_at is None else str(self.attained_at),
            "truncation_caveat": self.truncation_caveat,
            "skipped_vertices": self.skipped,
        }


def norm_bound(model: WeightedGraphModel, n: int = 1) -> NormBound:
    """sup of h_n over the truncated vertex set; this is the squared norm of the n-th power."""
    best, at, skipped = mpf(0), None, 0
    for v in model.shape.vertices():
        try:
            h = h_n(model, v, n).value
        except TruncationExhausted:
            skipped += 1
            continue
        if h > best:
            best, at = h, v
    caveat = (
        skipped > 0
        or model.shape.infinite
        or (isinstance(at, Branch) and at.j == model.shape.branch_depth)
    )
    return NormBound(best, at, caveat, skipped)


@dataclass(frozen=True)
class DensityVerdict:
    verdict: str
    value: Optional[mpf]
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "value": None if self.value is None else to_json_number(self.value),
            "notes": list(self.notes),
        }


def power_density(model: WeightedGraphModel, n: int) -> DensityVerdict:
    """Whether the n-th power has dense domain, via the integral test on the seed measures.

    The test is finiteness of sum_i mu(x_{i,1}) int t^(n+k) / (t^(k+1) - 1) dP_i.
    """
    k = model.kappa
    if not model.has_all_seeds:
        return DensityVerdict(UNKNOWN, None, ("model has no seed measures",))
    total = mpf(0)
    notes = []
    unknown = False
    for i in model.shape.branches:
        s = model.seeds[i]
        if s.atoms[0].location <= 1:
            return DensityVerdict(UNKNOWN, None, (f"seed {i} charges [0, 1]",))
        w = model.weight(Branch(i, 1))
        total += w * integrate(s, lambda t: t ** (n + k) / (t ** (k + 1) - 1))
        if not s.exact:
            # on the tail t^(n+k)/(t^(k+1)-1) <= C t^(n-1)
            try:
                s.tail_integral_bound(max(n - 1, 0))
            except TailDegreeExceeded:
                unknown = True
                notes.append(f"seed {i}: tail degree {s.tail_degree} too small for n = {n}")
    if model.shape.infinite:
        if model.eta_tail is None:
            return DensityVerdict(UNKNOWN, None, ("infinitely many branches without tail metadata",))
        tb = model.eta_tail.ratio_sum(n + k, k)
        if tb is None:
            return DensityVerdict(UNKNOWN, None, ("tail branches undecided",))
        if tb == math.inf or (isinstance(tb, mpf) and mpmath.isinf(tb)):
            return DensityVerdict(NOT_DENSE, mpmath.inf, ("sum over branches diverges",))
    if unknown:
        return DensityVerdict(UNKNOWN, total, tuple(notes))
    return DensityVerdict(DENSE, total, tuple(notes))


@dataclass(frozen=True)
class HyponormalityReport:
    per_vertex_slack: dict
    slack_error: dict
    verdict: str
    x0_test_left: Optional[mpf] = None
    x0_test_right: Optional[mpf] = None

    @property
    def min_slack(self):
        return min(self.per_vertex_slack.values())

    def to_dict(self) -> dict:
        d = {
            "verdict": self.verdict,
            "per_vertex_slack": {str(v): to_json_number(s) for v, s in sorted(self.per_vertex_slack.items())},
        }
        if self.x0_test_left is not None:
            d["x0_test_left"] = to_json_number(self.x0_test_left)
            d["x0_test_right"] = to_json_number(self.x0_test_right)
        return d


def _preimage_weight(model: WeightedGraphModel, y: Vertex):
    """mu(phi^{-1}(y)) with an error bound (value, err)."""
    k = model.kappa
    if isinstance(y, Branch):
        b = model.weight_bounded(Branch(y.i, y.j + 1))
        return b.value, b.error
    if y.r < k:
        return model.weight(Circuit(y.r + 1)), mpf(0)
    val = model.weight(Circuit(0))
    err = mpf(0)
    for i in model.shape.branches:
        b = model.weight_bounded(Branch(i, 1))
        val += b.value
        err += b.error
    if model.shape.infinite:
        err += tail_moment_sum(model, 0)
    return val, err


def hyponormality(model: WeightedGraphModel, tol: float = 1e-12, depth: Optional[int] = None) -> HyponormalityReport:
    """Slack 1 - (1/mu(x)) sum_{y in phi^{-1}(x)} mu(y)^2 / mu(phi^{-1}(y)) at every truncated vertex.

    Computed slacks are upper bounds when tail branches are omitted, so a
    negative slack is conclusive while a small positive one may be Unknown.
    """
    k = model.kappa
    slack, errs = {}, {}
    for x in model.shape.vertices(depth):
        pre = preimage(model.shape, x)
        try:
            mu_x = model.weight(x)
            acc, err = mpf(0), mpf(0)
            for y in pre.vertices:
                wy = model.weight_bounded(y)
                pw, pe = _preimage_weight(model, y)
                term = wy.value**2 / pw
                acc += term
                err += term * (2 * wy.error / wy.value + pe / pw)
            if pre.truncated and x == Circuit(k):
                # omitted y contribute mu(y)^2 / mu(phi^{-1} y) <= mu(y)
                err += tail_moment_sum(model, 0)
            elif pre.truncated:
                continue
        except TruncationExhausted:
            continue
        slack[x] = 1 - acc / mu_x
        errs[x] = err / mu_x
    if not slack:
        raise TruncationExhausted("no vertex has enough data for the hyponormality test")
    if any(s + errs[v] < -tol for v, s in slack.items()):
        verdict = NOT_HYPONORMAL
    elif all(s - errs[v] >= -tol for v, s in slack.items()):
        verdict = HYPONORMAL
    else:
        verdict = UNKNOWN
    left = right = None
    if k == 0 and Circuit(0) in slack:
        mu0 = model.weight(Circuit(0))
        ws = [model.weight(Branch(i, 1)) for i in model.shape.branches]
        w2 = [model.weight(Branch(i, 2)) for i in model.shape.branches]
        left = mpmath.fsum(a * a / (mu0 * b) for a, b in zip(ws, w2))
        right = 1 - mu0 / (mu0 + mpmath.fsum(ws))
    return HyponormalityReport(slack, errs, verdict, left, right)


def conditional_expectation(model: WeightedGraphModel, f: Union[Mapping, Callable], x: Vertex) -> mpf:
    """Weighted average of f over phi^{-1}(x)."""
    pre = preimage(model.shape, x)
    if not pre.vertices:
        raise EmptyPreimage(f"{x} has no stored preimage")
    get = f if callable(f) else (lambda v: f.get(v, 0))
    num = mpmath.fsum(model.weight(y) * mpf(get(y)) for y in pre.vertices)
    den = mpmath.fsum(model.weight(y) for y in pre.vertices)
    return num / den


@dataclass
class SubnormalityEvidence:
    hankel: dict
    shift_dominance: object
    carleman: object
    flags: dict = field(default_factory=dict)
    unproven_hypotheses: tuple = UNPROVEN_HYPOTHESES
    evidence_flag: str = TRUNCATION_FLAG

    def to_dict(self) -> dict:
        return {
            "evidence_flag": self.evidence_flag,
            "unproven_hypotheses": list(self.unproven_hypotheses),
            "flags": self.flags,
            "hankel": {str(v): r.to_dict() for v, r in sorted(self.hankel.items())},
            "shift_dominance": self.shift_dominance.to_dict(),
            "carleman": None if self.carleman is None else self.carleman.to_dict(),
        }


def h_sequence(model: WeightedGraphModel, v: Vertex, count: int) -> MomentSequence:
    vals, errs = [], []
    for n in range(count):
        b = h_n(model, v, n)
        vals.append(b.value)
        errs.append(b.error)
    return MomentSequence(tuple(vals), tuple(errs))


def subnormality_evidence(
    model: WeightedGraphModel, order: int = 4, carleman_terms: int = 20, tol: Optional[float] = None
) -> SubnormalityEvidence:
    """Finite-prefix evidence for the sufficient conditions of subnormality (never a proof)."""
    k = model.kappa
    count = 2 * order + 2
    targets = [Circuit(0), Circuit(k)] + [Branch(i, 1) for i in model.shape.branches]
    hank = {}
    for v in dict.fromkeys(targets):
        try:
            hank[v] = hankel_report(h_sequence(model, v, count), tol)
        except TruncationExhausted:
            continue
    sd = shift_dominance(h_sequence(model, Circuit(0), count), tol)
    carl = None
    try:
        strided = [h_n(model, Circuit(0), j * (k + 1)).value for j in range(carleman_terms + 1)]
        if all(s > 0 and not mpmath.isinf(s) for s in strided):
            carl = carleman_diagnostic(MomentSequence(tuple(strided)))
    except TruncationExhausted:
        pass
    flags = {
        "hankel_all_stieltjes": all(r.verdict == "StieltjesConsistent" for r in hank.values()),
        "shift_dominance": sd.passed,
        "carleman_diverging": None if carl is None else carl.growth_class == "Diverging",
    }
    return SubnormalityEvidence(hank, sd, carl, flags)
