"""Positivity tests for finite moment sequences and the homothety transform."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

import mpmath
import numpy as np
from mpmath import mpf

from .errors import NonPositiveEntry
from .measures import Homothety
from .precision import current_mode, from_json_number, psd_tol, to_json_number

STIELTJES = "StieltjesConsistent"
HAMBURGER_ONLY = "HamburgerOnly"
NOT_HAMBURGER = "NotHamburger"

TRUNCATION_FLAG = "truncation-level evidence only"


@dataclass(frozen=True)
class MomentSequence:
    values: tuple
    error_bounds: Optional[tuple] = None

    def __post_init__(self):
        vals = tuple(mpf(v) for v in self.values)
        if not vals:
            raise ValueError("a moment sequence needs at least one entry")
        object.__setattr__(self, "values", vals)
        if self.error_bounds is not None:
            errs = tuple(mpf(e) for e in self.error_bounds)
            if len(errs) != len(vals):
                raise ValueError("error_bounds must match values in length")
            object.__setattr__(self, "error_bounds", errs)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, n):
        return self.values[n]

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def differences(self) -> "MomentSequence":
        vals = [b - a for a, b in zip(self.values, self.values[1:])]
        errs = None
        if self.error_bounds is not None:
            errs = [x + y for x, y in zip(self.error_bounds, self.error_bounds[1:])]
        return MomentSequence(tuple(vals), None if errs is None else tuple(errs))

    def to_dict(self) -> dict:
        errs = self.error_bounds or (mpf(0),) * len(self.values)
        return {
            "values": [to_json_number(v) for v in self.values],
            "error_bounds": [to_json_number(e) for e in errs],
        }

    @classmethod
    def from_dict(cls, d) -> "MomentSequence":
        errs = d.get("error_bounds")
        return cls(
            tuple(from_json_number(v) for v in d["values"]),
            None if errs is None else tuple(from_json_number(e) for e in errs),
        )


def hankel_matrix(values: Sequence, k: int, shift: int = 0):
    return mpmath.matrix([[values[i + j + shift] for j in range(k + 1)] for i in range(k + 1)])


def min_eigenvalue(A) -> mpf:
    """Smallest eigenvalue of a real symmetric matrix at the working precision."""
    if current_mode() == "double":
        arr = np.array(A.tolist(), dtype=float)
        if np.all(np.isfinite(arr)):
            return mpf(float(np.linalg.eigvalsh(arr)[0]))
    return min(mpmath.eigsy(A, eigvals_only=True))


@dataclass(frozen=True)
class HankelOrder:
    order: int
    min_eig_base: mpf
    det_base: mpf
    scale_base: mpf
    min_eig_shift: Optional[mpf] = None
    det_shift: Optional[mpf] = None
    scale_shift: Optional[mpf] = None

    def base_fails(self, tol) -> bool:
        return self.min_eig_base < -tol * self.scale_base

    def shift_fails(self, tol) -> bool:
        return self.min_eig_shift is not None and self.min_eig_shift < -tol * self.scale_shift


@dataclass(frozen=True)
class HankelReport:
    orders: tuple
    verdict: str
    failing_order: Optional[int]
    tol: float
    flags: tuple = (TRUNCATION_FLAG,)

    @property
    def max_passing_order(self) -> int:
        """Largest k such that every minor up to k passes both tests."""
        best = -1
        for o in self.orders:
            if o.min_eig_shift is None:
                break
            if o.base_fails(self.tol) or o.shift_fails(self.tol):
                break
            best = o.order
        return best

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "failing_order": self.failing_order,
            "tol": self.tol,
            "flags": list(self.flags),
            "orders": [
                {
                    "order": o.order,
                    "min_eig_base": to_json_number(o.min_eig_base),
                    "det_base": to_json_number(o.det_base),
                    "min_eig_shift": None if o.min_eig_shift is None else to_json_number(o.min_eig_shift),
                    "det_shift": None if o.det_shift is None else to_json_number(o.det_shift),
                }
                for o in self.orders
            ],
        }


def hankel_report(g: MomentSequence, tol: Optional[float] = None) -> HankelReport:
    """Hamburger and Stieltjes positivity of all available Hankel sections."""
    tol = psd_tol() if tol is None else tol
    vals = g.values
    N = g.N
    orders = []
    base_fail = None
    shift_fail = None
    for k in range(N // 2 + 1):
        A = hankel_matrix(vals, k)
        scale_b = max(abs(vals[2 * i]) for i in range(k + 1))
        eb = min_eigenvalue(A)
        db = mpmath.det(A)
        es = ds = None
        scale_s = None
        if 2 * k + 1 <= N:
            B = hankel_matrix(vals, k, shift=1)
            scale_s = max(abs(vals[2 * i + 1]) for i in range(k + 1))
            es = min_eigenvalue(B)
            ds = mpmath.det(B)
        o = HankelOrder(k, eb, db, scale_b, es, ds, scale_s)
        orders.append(o)
        if base_fail is None and o.base_fails(tol):
            base_fail = k
        if shift_fail is None and o.shift_fails(tol):
            shift_fail = k
    if base_fail is not None:
        verdict, failing = NOT_HAMBURGER, base_fail
    elif shift_fail is not None:
        verdict, failing = HAMBURGER_ONLY, shift_fail
    else:
        verdict, failing = STIELTJES, None
    return HankelReport(tuple(orders), verdict, failing, tol)


@dataclass(frozen=True)
class ShiftDominanceReport:
    passed: bool
    failing_sequence: Optional[str]
    failing_order: Optional[int]
    base: HankelReport
    differences: Optional[HankelReport]
    flags: tuple = (TRUNCATION_FLAG,)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failing_sequence": self.failing_sequence,
            "failing_order": self.failing_order,
            "base": self.base.to_dict(),
            "differences": None if self.differences is None else self.differences.to_dict(),
            "flags": list(self.flags),
        }


def _first_base_failure(rep: HankelReport) -> Optional[int]:
    for o in rep.orders:
        if o.base_fails(rep.tol):
            return o.order
    return None


def shift_dominance(g: MomentSequence, tol: Optional[float] = None) -> ShiftDominanceReport:
    """Both gamma and its forward differences must have PSD Hankel sections.

    Passing is truncation-level evidence for a representing measure on [1, inf).
    """
    if g.N < 1:
        raise ValueError("shift dominance needs at least two entries")
    base = hankel_report(g, tol)
    diff = hankel_report(g.differences(), tol)
    fb = _first_base_failure(base)
    fd = _first_base_failure(diff)
    if fb is not None:
        return ShiftDominanceReport(False, "base", fb, base, diff)
    if fd is not None:
        return ShiftDominanceReport(False, "differences", fd, base, diff)
    return ShiftDominanceReport(True, None, None, base, diff)


def transform_T(g: MomentSequence, h: Homothety, direction: str = "forward") -> MomentSequence:
    """Moment transform induced by a homothety, or its inverse."""
    th, a = h.scale, h.shift
    vals = g.values
    errs = g.error_bounds
    out, out_err = [], []
    for n in range(len(vals)):
        acc = []
        eacc = []
        for j in range(n + 1):
            if direction == "forward":
                w = comb(n, j) * a ** (n - j) * th**n
            elif direction == "inverse":
                w = comb(n, j) * (-a) ** (n - j) * th ** (-j)
            else:
                raise ValueError("direction must be 'forward' or 'inverse'")
            acc.append(w * vals[j])
            if errs is not None:
                eacc.append(abs(w) * errs[j])
        out.append(mpmath.fsum(acc))
        out_err.append(mpmath.fsum(eacc))
    return MomentSequence(tuple(out), tuple(out_err) if errs is not None else None)


DIVERGING = "Diverging"
CONVERGING = "Converging"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class CarlemanReport:
    partial_sums: tuple
    growth_class: str
    fit: dict = field(default_factory=dict)
    flags: tuple = ("advisory heuristic", TRUNCATION_FLAG)

    def to_dict(self) -> dict:
        return {
            "partial_sums": [to_json_number(s) for s in self.partial_sums],
            "growth_class": self.growth_class,
            "fit": self.fit,
            "flags": list(self.flags),
        }


def carleman_diagnostic(g: MomentSequence) -> CarlemanReport:
    """Partial Carleman sums and a heuristic growth class.

    log(gamma_n) is fitted on n log n and n^2 (with n and 1 as nuisance terms)
    over the last half of the data.  Terms behave like n^(-c1/2) exp(-c2 n/2),
    so the sum diverges iff c2 <= 0 and c1 <= 2.
    """
    vals = g.values
    if any(not v > 0 for v in vals):
        raise NonPositiveEntry("Carleman sums need positive entries")
    sums = []
    acc = mpf(0)
    for n in range(1, len(vals)):
        acc += vals[n] ** (mpf(-1) / (2 * n))
        sums.append(acc)
    N = g.N
    ns = [n for n in range(max(1, N // 2), N + 1)]
    fit: dict = {}
    if len(ns) < 4:
        return CarlemanReport(tuple(sums), INCONCLUSIVE, fit)
    X = np.array([[n * math.log(n), n * n, n, 1.0] for n in ns])
    y = np.array([float(mpmath.log(vals[n])) for n in ns])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    c1, c2 = float(coef[0]), float(coef[1])
    fit = {"n_log_n": c1, "n_squared": c2, "window": [ns[0], ns[-1]]}
    if c2 > 1e-2:
        cls = CONVERGING
    elif c2 < -1e-2:
        cls = DIVERGING
    elif c1 <= 2.2:
        cls = DIVERGING
    elif c1 >= 2.5:
        cls = CONVERGING
    else:
        cls = INCONCLUSIVE
    return CarlemanReport(tuple(sums), cls, fit)


S_INDETERMINATE = "S-Indeterminate"
S_DETERMINATE = "S-Determinate"
NOT_STIELTJES = "NotStieltjes"


def classify_shifted(inf_supp_friedrichs, h: Homothety, tol=0) -> str:
    """Stieltjes status of a transformed S-indeterminate sequence.

    ``inf_supp_friedrichs`` is trusted metadata: the inf of the support of the
    Friedrichs measure of the original sequence.
    """
    c = h(mpf(inf_supp_friedrichs))
    if c > tol:
        return S_INDETERMINATE
    if c < -tol:
        return NOT_STIELTJES
    return S_DETERMINATE
