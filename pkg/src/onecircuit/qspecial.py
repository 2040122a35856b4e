"""q-series and two explicit families of N-extremal measures.

The Al-Salam--Carlitz pair lives at q^{-n} and a q^{-n}; the quartic
birth-and-death pair lives at (k pi / K0)^4.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
from mpmath import mpf

from .errors import DivergentProduct, NotFound, ParameterOutOfRange
from .measures import Atom, AtomicMeasure, Bounded

INF = math.inf

DEFAULT_ASC_ATOMS = 40
DEFAULT_QUARTIC_ATOMS = 30
MAX_TAIL_DEGREE = 64


@dataclass(frozen=True)
class QPair:
    a: float
    q: float


def q_pochhammer(z, q, n, eps=None) -> Bounded:
    """(z; q)_n, with n a nonnegative integer or ``math.inf``."""
    z, q = mpf(z), mpf(q)
    if n != INF:
        acc = mpf(1)
        for j in range(int(n)):
            acc *= 1 - z * q**j
        return Bounded(acc, mpf(0))
    if abs(q) >= 1:
        raise DivergentProduct("(z;q)_inf needs |q| < 1")
    eps = mpf(2) ** (-mpmath.mp.prec) if eps is None else mpf(eps)
    acc = mpf(1)
    j = 0
    while abs(z * q**j) >= eps * (1 - abs(q)):
        acc *= 1 - z * q**j
        j += 1
    # omitted factors j, j+1, ...:  |log prod| <= s / (1 - |z q^j|),  s = |z q^j| / (1 - |q|)
    head = abs(z * q**j)
    if head == 0:
        return Bounded(acc, mpf(0))
    L = head / (1 - abs(q)) / (1 - head)
    return Bounded(acc, abs(acc) * mpmath.expm1(L))


def qpoch(z, q, n) -> mpf:
    return q_pochhammer(z, q, n).value


def asc_eval(p: QPair, n: int, x) -> mpf:
    """V_n^{(a)}(x; q) from the three-term recurrence."""
    a, q, x = mpf(p.a), mpf(p.q), mpf(x)
    if q == 0:
        raise ParameterOutOfRange("q must be nonzero")
    prev, cur = mpf(0), mpf(1)
    for k in range(n):
        nxt = (x - (1 + a) / q**k) * cur - a * (1 - q**k) / q ** (2 * k - 1) * prev
        prev, cur = cur, nxt
    return cur


def asc_polynomial_table(p: QPair, n: int) -> list[list[mpf]]:
    """Monomial coefficients of V_0 .. V_n (lowest degree first)."""
    a, q = mpf(p.a), mpf(p.q)
    table = [[mpf(1)]]
    prev = [mpf(0)]
    cur = [mpf(1)]
    for k in range(n):
        b = (1 + a) / q**k
        c = a * (1 - q**k) / q ** (2 * k - 1)
        nxt = [mpf(0)] * (len(cur) + 1)
        for i, v in enumerate(cur):
            nxt[i + 1] += v
            nxt[i] -= b * v
        for i, v in enumerate(prev):
            nxt[i] -= c * v
        prev, cur = cur, nxt
        table.append(cur)
    return table


def asc_orthogonalizable(a, q) -> bool:
    if q == 0:
        raise ParameterOutOfRange("q must be nonzero")
    if a < 0:
        return -1 < q < 0 or q > 1
    if a > 0:
        return 0 < q < 1
    return False


def _check_beta(a, q):
    if not (a > 0 and 0 < q < 1):
        raise ParameterOutOfRange("need a > 0 and 0 < q < 1")
    if not a * q < 1:
        raise ParameterOutOfRange("need a q < 1")


def _qseries_tail(first_term, ratio_at) -> tuple[int, mpf, mpf]:
    """Pick a tail degree D and bound the omitted mass and D-th moment.

    ``first_term(D)`` is the first omitted term of the D-th moment series and
    ``ratio_at(D)`` an upper bound, valid for the whole tail, on the ratio of
    consecutive terms (decreasing along the series).
    """
    if ratio_at(0) > mpf(1) / 2:
        raise ParameterOutOfRange("atom count too small for a geometric tail bound")
    mass = first_term(0) / (1 - ratio_at(0))
    D = 0
    for d in range(1, MAX_TAIL_DEGREE + 1):
        if ratio_at(d) <= mpf(1) / 2:
            D = d
        else:
            break
    return D, mass, first_term(D) / (1 - ratio_at(D)) if D else mass


def asc_beta_measure(p: QPair, atom_count: int = DEFAULT_ASC_ATOMS) -> AtomicMeasure:
    """Truncation of the measure at q^{-n} with masses (aq;q)_inf a^n q^{n^2}/((aq;q)_n (q;q)_n)."""
    a, q = mpf(p.a), mpf(p.q)
    _check_beta(a, q)
    N = atom_count
    c = qpoch(a * q, q, INF)
    atoms = []
    den1, den2 = mpf(1), mpf(1)
    for n in range(N + 1):
        w = c * a**n * q ** (n * n) / (den1 * den2)
        if n == N:
            break
        atoms.append(Atom(q ** (-n), w))
        den1 *= 1 - a * q ** (n + 1)
        den2 *= 1 - q ** (n + 1)

    def first(D):
        return w * q ** (-N * D)

    def ratio(D):
        return a * q ** (2 * N + 1 - D) / ((1 - a * q ** (N + 1)) * (1 - q ** (N + 1)))

    D, tm, tmom = _qseries_tail(first, ratio)
    return AtomicMeasure(
        tuple(atoms), tm, D, tmom,
        metadata={"family": "asc-beta", "a": float(p.a), "q": float(p.q), "atoms": N,
                  "role": "Krein measure for a <= 1, Friedrichs for 1 < a < 1/q (recorded, not verified)"},
    )


def asc_gamma_measure(p: QPair, atom_count: int = DEFAULT_ASC_ATOMS) -> AtomicMeasure:
    """Truncation of the measure at a q^{-n} with masses (q/a;q)_inf a^{-n} q^{n^2}/((q/a;q)_n (q;q)_n)."""
    a, q = mpf(p.a), mpf(p.q)
    if not (0 < q < 1 and 1 < a < 1 / q):
        raise ParameterOutOfRange("need 0 < q < 1 and 1 < a < 1/q")
    N = atom_count
    c = qpoch(q / a, q, INF)
    atoms = []
    den1, den2 = mpf(1), mpf(1)
    for n in range(N + 1):
        w = c * a ** (-n) * q ** (n * n) / (den1 * den2)
        if n == N:
            break
        atoms.append(Atom(a * q ** (-n), w))
        den1 *= 1 - q ** (n + 1) / a
        den2 *= 1 - q ** (n + 1)

    def first(D):
        return w * (a * q ** (-N)) ** D

    def ratio(D):
        return q ** (2 * N + 1 - D) / (a * (1 - q ** (N + 1) / a) * (1 - q ** (N + 1)))

    D, tm, tmom = _qseries_tail(first, ratio)
    return AtomicMeasure(
        tuple(atoms), tm, D, tmom,
        metadata={"family": "asc-gamma", "a": float(p.a), "q": float(p.q), "atoms": N,
                  "role": "Krein measure for 1 < a < 1/q (recorded, not verified)"},
    )


def asc_moment(p: QPair, n: int) -> mpf:
    """Closed-form n-th moment of the Al-Salam--Carlitz measure."""
    a, q = mpf(p.a), mpf(p.q)
    _check_beta(a, q)
    qq = [qpoch(q, q, k) for k in range(n + 1)]
    return mpmath.fsum(qq[n] * q ** (k * (k - n)) / (qq[k] * qq[n - k]) * a**k for k in range(n + 1))


def euler_predicate(a, q) -> mpf:
    """(q/a; q)_inf + (aq; q)_inf - 1; positive when the predicate holds."""
    a, q = mpf(a), mpf(q)
    return qpoch(q / a, q, INF) + qpoch(a * q, q, INF) - 1


def pentagonal_margin(q) -> mpf:
    """(q; q)_inf - (1 - q/(1-q)); positive when the lower bound holds."""
    q = mpf(q)
    return qpoch(q, q, INF) - (1 - q / (1 - q))


@dataclass(frozen=True)
class EulerReport:
    q0: mpf
    tested: int
    first_failure: Optional[mpf]
    late_passes: tuple
    pentagonal_violations: tuple


def default_euler_grid(a, step=1e-3) -> list[mpf]:
    a = mpf(a)
    step = mpf(step)
    out = []
    k = 1
    while k * step < 1 / a:
        out.append(k * step)
        k += 1
    return out


def euler_threshold(a, search_grid: Optional[Sequence] = None, report: bool = False):
    """Largest grid point q0 < 1/a below which the Euler predicate holds throughout."""
    a = mpf(a)
    if not a > 1:
        raise ParameterOutOfRange("need a > 1")
    grid = default_euler_grid(a) if search_grid is None else [mpf(g) for g in search_grid]
    grid = [g for g in grid if 0 < g < 1 / a]
    q0 = None
    first_fail = None
    late = []
    pent_bad = []
    for g in grid:
        if pentagonal_margin(g) <= 0:
            pent_bad.append(g)
        ok = euler_predicate(a, g) > 0
        if first_fail is None:
            if ok:
                q0 = g
            else:
                first_fail = g
        elif ok:
            late.append(g)
    if q0 is None:
        raise NotFound(f"no grid point satisfies the Euler predicate for a = {a}")
    if report:
        return EulerReport(q0, len(grid), first_fail, tuple(late), tuple(pent_bad))
    return q0


@functools.lru_cache(maxsize=None)
def _gamma_quarter(prec: int) -> mpf:
    return mpmath.gamma(mpf(1) / 4)


def gamma_quarter() -> mpf:
    return _gamma_quarter(mpmath.mp.prec)


def quartic_K0() -> mpf:
    return gamma_quarter() ** 2 / (4 * mpmath.sqrt(mpmath.pi))


def quartic_pair(atom_count: int = DEFAULT_QUARTIC_ATOMS) -> tuple[AtomicMeasure, AtomicMeasure]:
    """The quartic pair (zeta, rho), each truncated to ``atom_count`` atoms."""
    N = atom_count
    if N < 2:
        raise ParameterOutOfRange("need at least two atoms")
    K0 = quartic_K0()
    pi = mpmath.pi
    C = 4 * pi / K0**2

    def x(k):
        return (k * pi / K0) ** 4

    def w(k):
        return C * k * pi / mpmath.sinh(k * pi)

    zeta_atoms = [Atom(mpf(0), pi / K0**2)] + [Atom(x(2 * n), w(2 * n)) for n in range(1, N)]
    rho_atoms = [Atom(x(2 * n + 1), w(2 * n + 1)) for n in range(N)]
    meta = {"family": "quartic", "atoms": N, "role": "N-extremal pair of one moment sequence (recorded, not verified)"}
    return (
        AtomicMeasure(tuple(zeta_atoms), *_quartic_tail(2 * N, K0), metadata=dict(meta, which="zeta")),
        AtomicMeasure(tuple(rho_atoms), *_quartic_tail(2 * N + 1, K0), metadata=dict(meta, which="rho")),
    )


def _quartic_tail(k0: int, K0) -> tuple[mpf, int, mpf]:
    """Tail over k = k0, k0+2, ... of C k pi/sinh(k pi) * x_k^D.

    With sinh(k pi) >= e^{k pi}(1 - e^{-2 pi})/2, term ratios are at most
    ((k+2)/k)^{4D+1} e^{-2 pi}, decreasing in k.
    """
    pi = mpmath.pi
    C = 4 * pi / K0**2
    s = (1 - mpmath.exp(-2 * pi)) / 2

    def first(D):
        return C * k0 * pi * mpmath.exp(-k0 * pi) / s * ((k0 * pi / K0) ** 4) ** D

    def ratio(D):
        return (mpf(k0 + 2) / k0) ** (4 * D + 1) * mpmath.exp(-2 * pi)

    D, tm, tmom = _qseries_tail(first, ratio)
    return tm, D, tmom
