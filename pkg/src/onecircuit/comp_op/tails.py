"""Branch families beyond ``eta_cap`` when there are infinitely many branches.

Both families here have Dirac seeds, P(x_{i,1}) = delta_{theta_i}, so every
quantity the model needs from the omitted branches is a sum of the form
sum_{i > cap} w_i * g(theta_i).  Each method returns an upper bound for such a
sum, ``math.inf`` when it is known to diverge, or ``None`` when the available
tail information cannot decide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import mpmath
from mpmath import mpf

from ..errors import TailDegreeExceeded
from ..measures import AtomicMeasure
from ..precision import from_json_number, to_json_number

TailBound = Optional[Union[mpf, float]]


@dataclass(frozen=True)
class PowerLawDiracTail:
    """Branches i > cap with seed delta_{i+1} and weight (i+1)^(-exponent)."""

    exponent: int
    cap: int

    def seed_location(self, i: int) -> mpf:
        return mpf(i + 1)

    def weight(self, i: int) -> mpf:
        return mpf(i + 1) ** (-self.exponent)

    def _power_sum(self, e) -> TailBound:
        # sum_{k >= cap+2} k^e <= integral_{cap+1}^inf x^e dx
        if e >= -1:
            return math.inf
        return mpf(self.cap + 1) ** (e + 1) / (-e - 1)

    def moment_sum(self, n: int) -> TailBound:
        """Bound for sum_{i>cap} mu(x_{i,1}) * int t^n dP_i."""
        return self._power_sum(n - self.exponent)

    def ratio_sum(self, p: int, kappa: int) -> TailBound:
        """Bound for sum_{i>cap} mu(x_{i,1}) * int t^p / (t^(kappa+1) - 1) dP_i."""
        s = self._power_sum(p - self.exponent - kappa - 1)
        if s == math.inf:
            return s
        return s / (1 - mpf(self.cap + 2) ** (-(kappa + 1)))

    def to_dict(self) -> dict:
        return {"kind": "power_law", "exponent": self.exponent, "cap": self.cap}


@dataclass(frozen=True)
class MeasureDiracTail:
    """Singleton blocks of a measure tau beyond its truncation.

    Branch i carries delta_{theta_i} with weight
    mu_kappa * (theta^(kappa+1) - 1) / theta^kappa * tau({theta}).
    Only the tail bounds of tau are needed.
    """

    tail_mass_bound: mpf
    tail_degree: int
    tail_moment_bound: mpf
    mu_xkappa: mpf
    kappa: int

    @classmethod
    def from_measure(cls, tau: AtomicMeasure, mu_xkappa, kappa: int) -> "MeasureDiracTail":
        return cls(tau.tail_mass_bound, tau.tail_degree, tau.tail_moment_bound, mpf(mu_xkappa), kappa)

    def _tau(self) -> AtomicMeasure:
        return AtomicMeasure((), self.tail_mass_bound, self.tail_degree, self.tail_moment_bound)

    def _integral(self, p: int) -> TailBound:
        if self.tail_mass_bound == 0:
            return mpf(0)
        try:
            return self._tau().tail_integral_bound(max(p, 0))
        except TailDegreeExceeded:
            return None

    def moment_sum(self, n: int) -> TailBound:
        # w * theta^n <= mu_kappa * theta^(n+1) * tau
        v = self._integral(n + 1)
        return None if v is None else self.mu_xkappa * v

    def ratio_sum(self, p: int, kappa: int) -> TailBound:
        # w * theta^p / (theta^(k+1) - 1) = mu_kappa * theta^(p - k) * tau
        v = self._integral(p - kappa)
        return None if v is None else self.mu_xkappa * v

    def to_dict(self) -> dict:
        return {
            "kind": "dirac_measure",
            "tail_mass_bound": to_json_number(self.tail_mass_bound),
            "tail_degree": self.tail_degree,
            "tail_moment_bound": to_json_number(self.tail_moment_bound),
            "mu_xkappa": to_json_number(self.mu_xkappa),
            "kappa": self.kappa,
        }


def tail_from_dict(d) -> Union[PowerLawDiracTail, MeasureDiracTail, None]:
    if d is None:
        return None
    if d["kind"] == "power_law":
        return PowerLawDiracTail(int(d["exponent"]), int(d["cap"]))
    if d["kind"] == "dirac_measure":
        return MeasureDiracTail(
            from_json_number(d["tail_mass_bound"]),
            int(d["tail_degree"]),
            from_json_number(d["tail_moment_bound"]),
            from_json_number(d["mu_xkappa"]),
            int(d["kappa"]),
        )
    raise ValueError(f"unknown tail kind {d['kind']!r}")


def is_finite(b: TailBound) -> bool:
    return b is not None and not (isinstance(b, float) and math.isinf(b)) and not mpmath.isinf(b)
