"""The one-circuit graph: a circuit x_0 .. x_kappa with eta branches hanging off x_kappa.

Branch vertex x_{i,j} sits j steps up branch i; the self-map walks every
vertex one step towards (and then around) the circuit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Union

from .errors import InvalidVertex

INF = math.inf


@dataclass(frozen=True)
class Circuit:
    r: int

    def key(self):
        return (0, self.r, 0)

    def __lt__(self, other):
        return self.key() < other.key()

    def __str__(self):
        return f"x_{self.r}"


@dataclass(frozen=True)
class Branch:
    i: int
    j: int

    def key(self):
        return (1, self.i, self.j)

    def __lt__(self, other):
        return self.key() < other.key()

    def __str__(self):
        return f"x_{self.i},{self.j}"


Vertex = Union[Circuit, Branch]

_VERTEX_RE = re.compile(r"^x_(\d+)(?:,(\d+))?$")


def parse_vertex(s: str) -> Vertex:
    m = _VERTEX_RE.match(s.strip())
    if not m:
        raise InvalidVertex(f"cannot parse vertex {s!r}")
    if m.group(2) is None:
        return Circuit(int(m.group(1)))
    return Branch(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class GraphShape:
    eta: Union[int, float]
    kappa: int
    branch_depth: int
    eta_cap: int = 0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.branch_depth < 1:
            raise ValueError("branch_depth must be at least 1")
        if self.eta == INF:
            if self.eta_cap < 1:
                raise ValueError("eta = inf needs a positive eta_cap")
        else:
            if int(self.eta) != self.eta or self.eta < 1:
                raise ValueError("eta must be a positive integer or inf")
            object.__setattr__(self, "eta", int(self.eta))
            object.__setattr__(self, "eta_cap", int(self.eta))

    @property
    def infinite(self) -> bool:
        return self.eta == INF

    @property
    def branches(self) -> range:
        return range(1, self.eta_cap + 1)

    def check(self, v: Vertex) -> None:
        if isinstance(v, Circuit):
            if not 0 <= v.r <= self.kappa:
                raise InvalidVertex(f"{v} is not on a circuit of length {self.kappa + 1}")
        elif isinstance(v, Branch):
            if v.j < 1 or v.i < 1 or (not self.infinite and v.i > self.eta):
                raise InvalidVertex(f"{v} is not a branch vertex of this shape")
        else:
            raise InvalidVertex(f"not a vertex: {v!r}")

    def vertices(self, depth: int | None = None) -> list[Vertex]:
        """Truncated vertex set in canonical order."""
        depth = self.branch_depth if depth is None else depth
        out: list[Vertex] = [Circuit(r) for r in range(self.kappa + 1)]
        out += [Branch(i, j) for i in self.branches for j in range(1, depth + 1)]
        return out

    def to_dict(self) -> dict:
        return {
            "eta": "inf" if self.infinite else self.eta,
            "kappa": self.kappa,
            "branch_depth": self.branch_depth,
            "eta_cap": self.eta_cap,
        }

    @classmethod
    def from_dict(cls, d) -> "GraphShape":
        eta = INF if d["eta"] in ("inf", "Infinity", None) else int(d["eta"])
        return cls(eta, int(d["kappa"]), int(d["branch_depth"]), int(d.get("eta_cap", 0) or 0))


class VertexSet(NamedTuple):
    vertices: frozenset
    truncated: bool

    def sorted(self) -> list[Vertex]:
        return sorted(self.vertices)


def phi(shape: GraphShape, v: Vertex) -> Vertex:
    shape.check(v)
    if isinstance(v, Branch):
        return Branch(v.i, v.j - 1) if v.j >= 2 else Circuit(shape.kappa)
    return Circuit(v.r - 1) if v.r >= 1 else Circuit(shape.kappa)


def preimage(shape: GraphShape, v: Vertex) -> VertexSet:
    """Preimage under the self-map, restricted to the truncated shape."""
    shape.check(v)
    k = shape.kappa
    if isinstance(v, Branch):
        if v.j >= shape.branch_depth:
            return VertexSet(frozenset(), True)
        return VertexSet(frozenset({Branch(v.i, v.j + 1)}), False)
    if v.r < k:
        return VertexSet(frozenset({Circuit(v.r + 1)}), False)
    out = {Circuit(0)} | {Branch(i, 1) for i in shape.branches}
    return VertexSet(frozenset(out), shape.infinite)


def iterated_preimage_bfs(shape: GraphShape, v: Vertex, n: int) -> VertexSet:
    """n-fold preimage by repeated one-step preimages."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    shape.check(v)
    current = {v}
    truncated = False
    for _ in range(n):
        nxt = set()
        for u in current:
            pre = preimage(shape, u)
            nxt |= pre.vertices
            truncated = truncated or pre.truncated
        current = nxt
    return VertexSet(frozenset(current), truncated)


def iterated_preimage_xkappa_closed(shape: GraphShape, n: int) -> VertexSet:
    """n-fold preimage of x_kappa in closed form.

    Writing n = j (kappa + 1) + r, it is {x_{r-1}} together with the branch
    vertices x_{i, l (kappa+1) + r} for 0 <= l <= j, where both x_{-1} and
    x_{i,0} mean x_kappa.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    k = shape.kappa
    j, r = divmod(n, k + 1)
    out: set = {Circuit(r - 1) if r >= 1 else Circuit(k)}
    truncated = False
    for l in range(j + 1):
        depth = l * (k + 1) + r
        if depth == 0:
            continue
        if depth > shape.branch_depth:
            truncated = True
            continue
        out |= {Branch(i, depth) for i in shape.branches}
    if shape.infinite and n >= 1:
        truncated = True
    return VertexSet(frozenset(out), truncated)
