"""Finite truncations of positive atomic measures on the half-line.

An :class:`AtomicMeasure` stores its smallest atoms explicitly plus two numbers
bounding what was cut off: the omitted mass and the omitted ``D``-th moment.
Every downstream error bound is derived from these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import mpmath
from mpmath import mpf

from .errors import AtomNotFound, EmptyMeasure, NegativeSupport, TailDegreeExceeded
from .precision import from_json_number, to_json_number

ZERO = mpf(0)


class Bounded(NamedTuple):
    """A computed value together with an upper bound on its absolute error."""

    value: mpf
    error: mpf


@dataclass(frozen=True)
class Atom:
    location: mpf
    mass: mpf

    def __post_init__(self):
        object.__setattr__(self, "location", mpf(self.location))
        object.__setattr__(self, "mass", mpf(self.mass))
        if not self.mass > 0:
            raise ValueError(f"atom mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class Homothety:
    """The affine map t -> scale * (t + shift)."""

    scale: mpf
    shift: mpf = ZERO

    def __post_init__(self):
        object.__setattr__(self, "scale", mpf(self.scale))
        object.__setattr__(self, "shift", mpf(self.shift))
        if not self.scale > 0:
            raise ValueError("homothety scale must be positive")

    def __call__(self, t):
        return self.scale * (t + self.shift)

    def compose(self, inner: "Homothety") -> "Homothety":
        """Return ``self o inner``."""
        return Homothety(self.scale * inner.scale, self.shift / inner.scale + inner.shift)

    def inverse(self) -> "Homothety":
        return Homothety(1 / self.scale, -self.shift * self.scale)


@dataclass(frozen=True)
class AtomicMeasure:
    atoms: tuple[Atom, ...]
    tail_mass_bound: mpf = ZERO
    tail_degree: int = 0
    tail_moment_bound: mpf = ZERO
    metadata: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in self.atoms)
        for left, right in zip(atoms, atoms[1:]):
            if not left.location < right.location:
                raise ValueError("atom locations must be strictly increasing")
        object.__setattr__(self, "atoms", atoms)
        tm = mpf(self.tail_mass_bound)
        tmom = mpf(self.tail_moment_bound)
        if tm < 0 or tmom < 0 or self.tail_degree < 0:
            raise ValueError("tail bounds must be nonnegative")
        if tm == 0:
            tmom = ZERO
        object.__setattr__(self, "tail_mass_bound", tm)
        object.__setattr__(self, "tail_moment_bound", tmom)
        object.__setattr__(self, "tail_degree", int(self.tail_degree))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence], **kwargs) -> "AtomicMeasure":
        atoms = sorted((Atom(t, w) for t, w in pairs), key=lambda a: a.location)
        return cls(tuple(atoms), **kwargs)

    @property
    def exact(self) -> bool:
        return self.tail_mass_bound == 0

    @property
    def locations(self) -> list[mpf]:
        return [a.location for a in self.atoms]

    @property
    def masses(self) -> list[mpf]:
        return [a.mass for a in self.atoms]

    def __len__(self):
        return len(self.atoms)

    def mass_at(self, t) -> mpf:
        """Mass of the atom stored exactly at ``t`` (zero if absent)."""
        for a in self.atoms:
            if a.location == t:
                return a.mass
        return ZERO

    def tail_integral_bound(self, n: int) -> mpf:
        """Upper bound for the integral of |t|^n over the omitted tail."""
        if self.exact:
            return ZERO
        if n == 0:
            return self.tail_mass_bound
        if n > self.tail_degree:
            raise TailDegreeExceeded(
                f"moment order {n} exceeds tail degree {self.tail_degree}"
            )
        if n == self.tail_degree:
            return self.tail_moment_bound
        # Lyapunov: the log of the n-th tail moment is convex in n
        s = mpf(n) / self.tail_degree
        return self.tail_mass_bound ** (1 - s) * self.tail_moment_bound**s

    def to_dict(self) -> dict:
        d = {
            "atoms": [[to_json_number(a.location), to_json_number(a.mass)] for a in self.atoms],
            "tail_mass_bound": to_json_number(self.tail_mass_bound),
            "tail_degree": self.tail_degree,
            "tail_moment_bound": to_json_number(self.tail_moment_bound),
        }
        if self.metadata:
            d["metadata"] = dict(self.metadata)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "AtomicMeasure":
        return cls(
            tuple(Atom(from_json_number(t), from_json_number(w)) for t, w in d["atoms"]),
            tail_mass_bound=from_json_number(d.get("tail_mass_bound", 0)),
            tail_degree=int(d.get("tail_degree", 0)),
            tail_moment_bound=from_json_number(d.get("tail_moment_bound", 0)),
            metadata=d.get("metadata", {}),
        )


def dirac(t, mass=1) -> AtomicMeasure:
    return AtomicMeasure((Atom(t, mass),))


def moment(m: AtomicMeasure, n: int) -> Bounded:
    """n-th moment of ``m`` from its atoms, with the tail as error bound."""
    if n < 0:
        raise ValueError("moment order must be nonnegative")
    err = m.tail_integral_bound(n)
    return Bounded(mpmath.fsum(a.mass * a.location**n for a in m.atoms), err)


def moments(m: AtomicMeasure, count: int) -> list[Bounded]:
    return [moment(m, n) for n in range(count)]


def total_mass(m: AtomicMeasure) -> Bounded:
    return moment(m, 0)


def integrate(m: AtomicMeasure, f: Callable) -> mpf:
    """Integral of ``f`` against the stored atoms only."""
    return mpmath.fsum(a.mass * f(a.location) for a in m.atoms)


def inf_support(m: AtomicMeasure) -> mpf:
    if not m.atoms:
        raise EmptyMeasure("measure has no atoms")
    return m.atoms[0].location


def pushforward(m: AtomicMeasure, h: Homothety, require_nonnegative: bool = True) -> AtomicMeasure:
    """Image of ``m`` under the homothety ``h``."""
    atoms = tuple(Atom(h(a.location), a.mass) for a in m.atoms)
    if require_nonnegative and atoms and atoms[0].location < 0:
        raise NegativeSupport(f"pushforward puts an atom at {atoms[0].location}")
    tail_moment = ZERO
    D = m.tail_degree
    if not m.exact and D > 0:
        last = m.atoms[-1].location if m.atoms else ZERO
        if h.shift <= 0 and last + h.shift >= 0:
            # tail lies where 0 <= t + a <= t
            tail_moment = h.scale**D * m.tail_moment_bound
        elif last > 0:
            # omitted atoms sit beyond the last one, so |t + a| <= t (1 + |a|/last)
            tail_moment = (h.scale * (1 + abs(h.shift) / last)) ** D * m.tail_moment_bound
        else:
            a = abs(h.shift)
            tail_moment = h.scale**D * 2 ** (D - 1) * (m.tail_moment_bound + a**D * m.tail_mass_bound)
    elif not m.exact:
        tail_moment = m.tail_mass_bound
    return AtomicMeasure(
        atoms,
        tail_mass_bound=m.tail_mass_bound,
        tail_degree=D,
        tail_moment_bound=tail_moment,
        metadata=m.metadata,
    )


def scale_mass(m: AtomicMeasure, r) -> AtomicMeasure:
    r = mpf(r)
    if not r > 0:
        raise ValueError("mass scale must be positive")
    return AtomicMeasure(
        tuple(Atom(a.location, a.mass * r) for a in m.atoms),
        tail_mass_bound=m.tail_mass_bound * r,
        tail_degree=m.tail_degree,
        tail_moment_bound=m.tail_moment_bound * r,
        metadata=m.metadata,
    )


def remove_atoms(m: AtomicMeasure, locations) -> AtomicMeasure:
    """Delete the atoms stored exactly at the given locations."""
    wanted = {mpf(t) for t in locations}
    present = {a.location for a in m.atoms}
    missing = wanted - present
    if missing:
        raise AtomNotFound(f"no atom at {sorted(missing)}")
    return AtomicMeasure(
        tuple(a for a in m.atoms if a.location not in wanted),
        tail_mass_bound=m.tail_mass_bound,
        tail_degree=m.tail_degree,
        tail_moment_bound=m.tail_moment_bound,
        metadata=m.metadata,
    )


def restrict(m: AtomicMeasure, indices: Iterable[int], keep_tail: bool) -> AtomicMeasure:
    """Restriction to the atoms with the given indices, optionally keeping the tail."""
    idx = sorted(set(indices))
    atoms = tuple(m.atoms[i] for i in idx)
    if keep_tail:
        return AtomicMeasure(atoms, m.tail_mass_bound, m.tail_degree, m.tail_moment_bound)
    return AtomicMeasure(atoms)


def reweight(m: AtomicMeasure, f: Callable, tail_scale=1, tail_power: int = 0) -> AtomicMeasure:
    """Measure with density ``f`` against ``m``.

    The tail bound assumes every omitted atom sits at t >= 1 and that
    ``f(t) <= tail_scale * t**tail_power`` there.  Atoms where ``f`` vanishes
    are dropped.
    """
    atoms = []
    for a in m.atoms:
        w = a.mass * f(a.location)
        if w < 0:
            raise ValueError("reweighting density must be nonnegative on the support")
        if w > 0:
            atoms.append(Atom(a.location, w))
    if m.exact:
        return AtomicMeasure(tuple(atoms))
    if m.atoms and m.atoms[-1].location < 1:
        raise ValueError("tail reweighting needs the truncation point at or above 1")
    C = mpf(tail_scale)
    D = m.tail_degree
    p = tail_power
    if p > D:
        raise TailDegreeExceeded(f"density growth t^{p} exceeds tail degree {D}")
    if p <= 0:
        new_mass = C * m.tail_mass_bound
        new_deg = D
    else:
        new_mass = C * m.tail_integral_bound(p)
        new_deg = D - p
    new_mom = C * m.tail_moment_bound if D > 0 else new_mass
    return AtomicMeasure(tuple(atoms), new_mass, new_deg, new_mom)


def combine(terms: Iterable[tuple]) -> AtomicMeasure:
    """Nonnegative combination sum c_k m_k, merging atoms at identical locations."""
    terms = [(mpf(c), m) for c, m in terms]
    acc: dict = {}
    tail_mass = ZERO
    tail_mom = ZERO
    degree = None
    for c, m in terms:
        if c < 0:
            raise ValueError("combination coefficients must be nonnegative")
        if c == 0:
            continue
        for a in m.atoms:
            acc[a.location] = acc.get(a.location, ZERO) + c * a.mass
        if not m.exact:
            tail_mass += c * m.tail_mass_bound
            degree = m.tail_degree if degree is None else min(degree, m.tail_degree)
    if degree is not None:
        for c, m in terms:
            if not m.exact and c > 0:
                tail_mom += c * m.tail_integral_bound(degree)
    atoms = tuple(Atom(t, w) for t, w in sorted(acc.items()) if w > 0)
    return AtomicMeasure(atoms, tail_mass, degree or 0, tail_mom)


def is_probability(m: AtomicMeasure, tol=1e-10) -> bool:
    v, err = total_mass(m)
    return abs(v - 1) <= tol + err


def max_relative_gap(xs: Sequence, ys: Sequence) -> float:
    """Largest |x - y| / max(|x|, |y|, tiny) over paired entries."""
    worst = 0.0
    for x, y in zip(xs, ys):
        scale = max(abs(x), abs(y), mpf(10) ** (-300))
        worst = max(worst, float(abs(x - y) / scale))
    return worst if not math.isnan(worst) else math.inf
