"""Radon--Nikodym derivatives h_n(x) = mu(phi^{-n}(x)) / mu(x).

x_0 values come from one recurrence; every circuit value is derived from them.
:func:`h_n_xkappa_direct` sums the weights of the iterated preimage of x_kappa
directly and serves as the independent check.
"""

from __future__ import annotations

from typing import Iterable, Optional

import mpmath
from mpmath import mpf

from ..errors import TruncationExhausted
from ..graph import Branch, Circuit, Vertex, iterated_preimage_xkappa_closed
from ..measures import Bounded
from .model import WeightedGraphModel, branch_sum, tail_moment_sum

INF = mpmath.inf


def _ratio(num: Bounded, den: Bounded) -> Bounded:
    v = num.value / den.value
    if mpmath.isinf(v):
        return Bounded(v, mpf(0))
    # weights are positive, so relative errors add
    return Bounded(v, abs(v) * (num.error / num.value + den.error / den.value))


def h_x0(model: WeightedGraphModel, n: int) -> Bounded:
    """h_n(x_0) by the circuit recurrence."""

    def compute():
        k = model.kappa
        mu0 = model.weight(Circuit(0))
        if n <= k:
            return Bounded(model.weight(Circuit(n)) / mu0, mpf(0))
        prev = h_x0(model, n - k - 1)
        s = branch_sum(model, n - k)
        if mpmath.isinf(prev.value) or mpmath.isinf(s.value):
            return Bounded(INF, mpf(0))
        return Bounded(prev.value + s.value / mu0, prev.error + s.error / mu0)

    return model.cached(("x0", n), compute)


def h_n(model: WeightedGraphModel, v: Vertex, n: int) -> Bounded:
    if n < 0:
        raise ValueError("n must be nonnegative")
    model.shape.check(v)
    if n == 0:
        return Bounded(mpf(1), mpf(0))
    if isinstance(v, Branch):
        return _ratio(model.weight_bounded(Branch(v.i, v.j + n)), model.weight_bounded(v))
    if v.r == 0:
        return h_x0(model, n)
    scale = model.weight(Circuit(0)) / model.weight(v)
    h = h_x0(model, n + v.r)
    return Bounded(scale * h.value, scale * h.error)


def h_phi(model: WeightedGraphModel, vertices: Optional[Iterable[Vertex]] = None, strict: bool = False) -> dict:
    """h_1 over the truncated vertex set (vertices past the data are skipped unless strict)."""
    out = {}
    for v in vertices if vertices is not None else model.shape.vertices():
        try:
            out[v] = h_n(model, v, 1).value
        except TruncationExhausted:
            if strict:
                raise
    return out


def h_n_xkappa_direct(model: WeightedGraphModel, n: int) -> Bounded:
    """h_n(x_kappa) as the weight of the closed-form iterated preimage over mu(x_kappa)."""
    k = model.kappa
    mu_k = model.weight(Circuit(k))
    if n == 0:
        return Bounded(mpf(1), mpf(0))
    j, r = divmod(n, k + 1)
    if r == 0:
        head = mu_k
        depths = [l * (k + 1) for l in range(1, j + 1)]
    else:
        head = model.weight(Circuit(r - 1))
        depths = [l * (k + 1) + r for l in range(j + 1)]
    total, err = head, mpf(0)
    for d in depths:
        s = branch_sum(model, d)
        if mpmath.isinf(s.value):
            return Bounded(INF, mpf(0))
        total += s.value
        err += s.error
    return Bounded(total / mu_k, err / mu_k)


def preimage_mass_xkappa(model: WeightedGraphModel, n: int) -> mpf:
    """Weight of the truncated n-fold preimage of x_kappa (finite eta only)."""
    pre = iterated_preimage_xkappa_closed(model.shape, n)
    if pre.truncated:
        raise TruncationExhausted("iterated preimage is truncated")
    return mpmath.fsum(model.weight(v) for v in pre.vertices)


def h_x0_direct(model: WeightedGraphModel, n: int) -> Bounded:
    """h_n(x_0) from the direct x_kappa sum, independent of the recurrence."""
    k = model.kappa
    mu0 = model.weight(Circuit(0))
    if n < k:
        return Bounded(model.weight(Circuit(n)) / mu0, mpf(0))
    d = h_n_xkappa_direct(model, n - k)
    scale = model.weight(Circuit(k)) / mu0
    return Bounded(scale * d.value, scale * d.error)


def dif1_residual(model: WeightedGraphModel, n: int) -> Bounded:
    """h_{n+k+1}(x_0) - h_n(x_0) - sum_i (mu(x_{i,1})/mu(x_0)) h_n(x_{i,1}), using direct values."""
    k = model.kappa
    mu0 = model.weight(Circuit(0))
    a = h_x0_direct(model, n + k + 1)
    b = h_x0_direct(model, n)
    parts, perr = [], mpf(0)
    for i in model.shape.branches:
        w1 = model.weight(Branch(i, 1))
        h = h_n(model, Branch(i, 1), n)
        parts.append(w1 / mu0 * h.value)
        perr += w1 / mu0 * h.error
    if model.shape.infinite:
        perr += tail_moment_sum(model, n) / mu0
    res = a.value - b.value - mpmath.fsum(parts)
    return Bounded(res, a.error + b.error + perr)


def derivative_table(model: WeightedGraphModel, max_n: int, vertices: Iterable[Vertex]) -> dict:
    """{(v, n): Bounded or None}; None marks cells the truncation cannot supply."""
    table = {}
    for v in vertices:
        for n in range(max_n + 1):
            try:
                table[(v, n)] = h_n(model, v, n)
            except TruncationExhausted:
                table[(v, n)] = None
    return table
