"""Discrete weights on the one-circuit graph."""

from __future__ import annotations

import threading
from typing import Mapping, Optional

import mpmath
from mpmath import mpf

from ..errors import TruncationExhausted
from ..graph import Branch, Circuit, GraphShape, Vertex, parse_vertex
from ..measures import AtomicMeasure, Bounded, moment
from ..precision import from_json_number, to_json_number
from .tails import tail_from_dict

SEED_MATCH_RTOL = 1e-12


class WeightedGraphModel:
    """Weights mu on the truncated vertex set, optionally backed by seed measures.

    ``seeds[i]`` is the measure P(x_{i,1}, .); when present the branch weights
    follow mu(x_{i,j}) = mu(x_{i,1}) * int t^(j-1) dP(x_{i,1}) beyond the stored
    depth.  ``eta_tail`` describes the branches past ``eta_cap`` when eta = inf.
    """

    def __init__(
        self,
        shape: GraphShape,
        mu: Mapping[Vertex, object],
        seeds: Optional[Mapping[int, AtomicMeasure]] = None,
        eta_tail=None,
        metadata: Optional[dict] = None,
    ):
        self.shape = shape
        self._mu = {v: mpf(w) for v, w in mu.items()}
        self.seeds = dict(seeds or {})
        self.eta_tail = eta_tail
        self.metadata = dict(metadata or {})
        self._cache: dict = {}
        self._lock = threading.Lock()
        self._validate()

    def _validate(self):
        shape = self.shape
        for r in range(shape.kappa + 1):
            if Circuit(r) not in self._mu:
                raise ValueError(f"missing weight for x_{r}")
        for i in shape.branches:
            if Branch(i, 1) not in self._mu:
                raise ValueError(f"missing weight for x_{i},1")
        for v, w in self._mu.items():
            shape.check(v)
            if not w > 0:
                raise ValueError(f"weight of {v} must be positive")
            if isinstance(v, Branch) and v.j > shape.branch_depth:
                raise ValueError(f"{v} lies beyond branch_depth")
        for i, seed in self.seeds.items():
            w1 = self._mu[Branch(i, 1)]
            for j in range(2, shape.branch_depth + 1):
                v = Branch(i, j)
                if v not in self._mu:
                    continue
                expected = w1 * moment(seed, j - 1).value
                if abs(self._mu[v] - expected) > SEED_MATCH_RTOL * abs(expected):
                    raise ValueError(f"weight of {v} disagrees with its seed measure")

    @property
    def kappa(self) -> int:
        return self.shape.kappa

    @property
    def has_all_seeds(self) -> bool:
        return all(i in self.seeds for i in self.shape.branches)

    def stored(self) -> dict:
        return dict(self._mu)

    def weight(self, v: Vertex) -> mpf:
        return self.weight_bounded(v).value

    def weight_bounded(self, v: Vertex) -> Bounded:
        """Weight of ``v``; the error reflects the truncation of its seed measure."""
        self.shape.check(v)
        if isinstance(v, Circuit):
            return Bounded(self._mu[v], mpf(0))
        if v.i > self.shape.eta_cap:
            raise TruncationExhausted(f"{v} lies beyond eta_cap")
        seed = self.seeds.get(v.i)
        if seed is None:
            if v in self._mu:
                return Bounded(self._mu[v], mpf(0))
            raise TruncationExhausted(f"no weight for {v} and no seed measure for branch {v.i}")
        w1 = self._mu[Branch(v.i, 1)]
        if v.j == 1:
            return Bounded(w1, mpf(0))
        try:
            m = moment(seed, v.j - 1)
        except Exception as exc:
            raise TruncationExhausted(str(exc)) from exc
        value = self._mu.get(v, w1 * m.value)
        return Bounded(value, w1 * m.error)

    def cached(self, key, compute):
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        val = compute()
        with self._lock:
            self._cache[key] = val
        return val

    def to_dict(self) -> dict:
        d = {
            "shape": self.shape.to_dict(),
            "mu": [[str(v), to_json_number(w)] for v, w in sorted(self._mu.items())],
        }
        tail = {}
        if self.seeds:
            tail["seeds"] = [[i, self.seeds[i].to_dict()] for i in sorted(self.seeds)]
        if self.eta_tail is not None:
            tail["eta_tail"] = self.eta_tail.to_dict()
        if tail:
            d["branch_tail"] = tail
        if self.metadata:
            d["metadata"] = self.metadata
        return d

    @classmethod
    def from_dict(cls, d) -> "WeightedGraphModel":
        shape = GraphShape.from_dict(d["shape"])
        mu = {parse_vertex(v): from_json_number(w) for v, w in d["mu"]}
        tail = d.get("branch_tail") or {}
        seeds = {int(i): AtomicMeasure.from_dict(m) for i, m in tail.get("seeds", [])}
        return cls(shape, mu, seeds, tail_from_dict(tail.get("eta_tail")), d.get("metadata"))


def branch_sum(model: WeightedGraphModel, depth: int) -> Bounded:
    """sum_i mu(x_{i,depth}) over all branches, tail included as error."""
    vals, errs = [], []
    for i in model.shape.branches:
        b = model.weight_bounded(Branch(i, depth))
        vals.append(b.value)
        errs.append(b.error)
    err = mpmath.fsum(errs)
    if model.shape.infinite:
        t = tail_moment_sum(model, depth - 1)
        if t == mpmath.inf:
            return Bounded(mpmath.inf, mpf(0))
        err += t
    return Bounded(mpmath.fsum(vals), err)


def tail_moment_sum(model: WeightedGraphModel, n: int):
    """Bound for sum over omitted branches of mu(x_{i,n+1})."""
    if model.eta_tail is None:
        raise TruncationExhausted("eta = inf model without tail metadata")
    b = model.eta_tail.moment_sum(n)
    if b is None:
        raise TruncationExhausted(f"tail information cannot bound branch sums at order {n}")
    return mpf(b) if b != float("inf") else mpmath.inf
