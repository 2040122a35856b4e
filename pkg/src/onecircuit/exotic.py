"""Non-hyponormal composition operators whose derivative sequences are all Stieltjes.

Two N-extremal measures nu, tau of one moment sequence (nu with an atom at 1,
tau supported beyond 1) are glued onto the graph: tau is cut into blocks, each
block seeds one branch, and nu minus its atom at 1 becomes P(x_kappa).  The
resulting weights fail the normalizing condition that a consistent family
would need, by exactly nu({1}).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import mpmath
from mpmath import mpf

from .comp_op import (
    MeasureDiracTail,
    WeightedGraphModel,
    extension_conditions,
    h_n,
    h_sequence,
    hyponormality,
)
from .comp_op.diagnostics import UNPROVEN_HYPOTHESES
from .errors import EmptyBlock, EulerPredicateFailed, GsViolated, NotFound, ParameterOutOfRange, TruncationExhausted
from .graph import INF, Branch, Circuit, GraphShape
from .measures import (
    AtomicMeasure,
    Homothety,
    inf_support,
    integrate,
    moment,
    pushforward,
    remove_atoms,
    restrict,
    reweight,
    scale_mass,
    total_mass,
)
from .moments import TRUNCATION_FLAG, hankel_report
from .precision import to_json_number
from .qspecial import QPair, asc_beta_measure, asc_gamma_measure, euler_predicate, quartic_pair

ONE = mpf(1)


# ---------------------------------------------------------------- partitions


@dataclass(frozen=True)
class Partition:
    """Blocks of atom indices into tau.  ``tail_block`` owns the truncated tail;
    ``None`` means the omitted atoms are further singleton blocks."""

    blocks: tuple
    tail_block: Optional[int] = None

    def __post_init__(self):
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        for b in blocks:
            if not b:
                raise EmptyBlock("partition blocks must be nonempty")
        if self.tail_block is not None and not 0 <= self.tail_block < len(blocks):
            raise ValueError("tail_block out of range")

    def validate(self, n_atoms: int) -> None:
        seen = [i for b in self.blocks for i in b]
        if len(seen) != len(set(seen)):
            raise ValueError("partition blocks overlap")
        if sorted(seen) != list(range(n_atoms)):
            raise ValueError("partition does not cover the atoms of tau")

    @property
    def all_singletons(self) -> bool:
        return self.tail_block is None and all(len(b) == 1 for b in self.blocks)

    def to_dict(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks], "tail_block": self.tail_block}

    @classmethod
    def from_dict(cls, d) -> "Partition":
        return cls(tuple(tuple(b) for b in d["blocks"]), d.get("tail_block"))


def canonical_partitions(tau: AtomicMeasure, eta, k: Optional[int] = None) -> Partition:
    """The standard partitions of tau's atoms.

    Without ``k``: eta - 1 leading singletons and one tail block.  With ``k``:
    the first k atoms form one block, the next eta - 2 atoms are singletons and
    the rest is the tail block.  For eta = inf there is no tail block and
    every remaining atom is a singleton.
    """
    n = len(tau.atoms)
    if eta != INF and eta < 2 and k is not None:
        raise ValueError("eta must be at least 2")
    if k is None:
        if eta == INF:
            return Partition(tuple((i,) for i in range(n)), None)
        if eta - 1 >= n:
            raise ValueError("not enough atoms for this eta")
        singles = tuple((i,) for i in range(eta - 1))
        return Partition(singles + (tuple(range(eta - 1, n)),), eta - 1)
    if k < 1:
        raise ValueError("k must be positive")
    first = tuple(range(k))
    if eta == INF:
        return Partition((first,) + tuple((i,) for i in range(k, n)), None)
    mid = tuple((i,) for i in range(k, k + eta - 2))
    start = k + eta - 2
    if start >= n:
        raise ValueError("not enough atoms for this partition")
    return Partition((first,) + mid + (tuple(range(start, n)),), len(mid) + 1)


# ---------------------------------------------------------------- lambda


@dataclass(frozen=True)
class LambdaReport:
    value: mpf
    inf_bound: mpf
    sup_bound: mpf
    error: mpf
    within_bounds: bool

    def to_dict(self) -> dict:
        return {
            "value": to_json_number(self.value),
            "inf_bound": to_json_number(self.inf_bound),
            "sup_bound": to_json_number(self.sup_bound),
            "error": float(self.error),
            "within_bounds": self.within_bounds,
        }


def _block_measure(tau: AtomicMeasure, partition: Partition, b: int) -> AtomicMeasure:
    return restrict(tau, partition.blocks[b], keep_tail=(b == partition.tail_block))


def lambda_functional(tau: AtomicMeasure, partition: Partition, rtol: float = 1e-12) -> LambdaReport:
    """sum over blocks of (int (t-1) dtau)^2 / int t(t-1) dtau, with its two universal bounds."""
    if inf_support(tau) <= 1:
        raise ParameterOutOfRange("tau must live beyond 1")
    partition.validate(len(tau.atoms))
    parts = []
    for b in range(len(partition.blocks)):
        m = _block_measure(tau, partition, b)
        i1 = integrate(m, lambda t: t - 1)
        i2 = integrate(m, lambda t: t * (t - 1))
        parts.append(i1 * i1 / i2)
    value = mpmath.fsum(parts)
    I1 = integrate(tau, lambda t: t - 1)
    I2 = integrate(tau, lambda t: t * (t - 1))
    inf_b = I1 * I1 / I2
    sup_b = integrate(tau, lambda t: (t - 1) / t)
    # every term is at most int_block (t-1)/t dtau <= tau(block)
    err = tau.tail_mass_bound
    slack = rtol * abs(sup_b) + err
    ok = inf_b - slack <= value <= sup_b + slack
    return LambdaReport(value, inf_b, sup_b, err, ok)


# ---------------------------------------------------------------- pairing checks


@dataclass(frozen=True)
class PairingReport:
    agreement_depth: int
    moments_agree: bool
    support_ok: bool
    mass_ok: bool
    kappa_ok: bool
    nu_at_1: mpf
    messages: tuple = ()

    @property
    def passed(self) -> bool:
        return self.moments_agree and self.support_ok and self.mass_ok and self.kappa_ok

    def to_dict(self) -> dict:
        return {
            "moment_agreement_depth": self.agreement_depth,
            "moments_agree": self.moments_agree,
            "support_ok": self.support_ok,
            "mass_ok": self.mass_ok,
            "kappa_ok": self.kappa_ok,
            "nu_at_1": to_json_number(self.nu_at_1),
            "messages": list(self.messages),
            "note": "N-extremality itself is trusted metadata; only agreement of moments is checked",
        }


def validate_pairing(nu: AtomicMeasure, tau: AtomicMeasure, kappa: int, moment_depth: int = 8, rtol: float = 1e-8) -> PairingReport:
    msgs = []
    depth = -1
    for n in range(moment_depth + 1):
        try:
            a, b = moment(nu, n), moment(tau, n)
        except Exception:
            msgs.append(f"moment {n} not available within tail degree")
            break
        if abs(a.value - b.value) <= rtol * abs(b.value) + a.error + b.error:
            depth = n
        else:
            msgs.append(f"moments of order {n} differ: {mpmath.nstr(a.value, 12)} vs {mpmath.nstr(b.value, 12)}")
            break
    moments_agree = depth >= moment_depth
    nu1 = nu.mass_at(ONE)
    support_ok = bool(nu.atoms) and inf_support(nu) == 1 and inf_support(tau) > 1
    if not support_ok:
        msgs.append("inf supp nu must equal 1 and inf supp tau must exceed 1")
    mass, merr = total_mass(nu)
    mass_ok = abs(mass - (1 + nu1)) <= rtol + merr
    if nu1 == 0:
        msgs.append("nu has no atom at 1")
        if mass_ok:
            msgs.append("nu is a probability measure without an atom at 1: contradicts the N-extremal pairing")
    if kappa == 0:
        kappa_ok = True
    else:
        lhs = 1 + integrate(tau, lambda t: t ** (-kappa))
        kappa_ok = lhs > total_mass(tau).value
        if not kappa_ok:
            msgs.append("1 + int t^-kappa dtau does not exceed tau(R+)")
    return PairingReport(depth, moments_agree, support_ok, mass_ok, kappa_ok, nu1, tuple(msgs))


# ---------------------------------------------------------------- construction


@dataclass(frozen=True)
class XiCheck:
    xi: mpf
    expected: Optional[mpf]
    identity_residuals: dict

    @property
    def xi_error(self) -> Optional[mpf]:
        return None if self.expected is None else abs(self.xi - self.expected)

    def passed(self, rtol: float = 1e-10) -> bool:
        if self.expected is None:
            return True
        return self.xi_error <= rtol * abs(self.expected)

    def to_dict(self) -> dict:
        return {
            "xi": to_json_number(self.xi),
            "minus_nu_at_1": None if self.expected is None else to_json_number(self.expected),
            "identity_residuals": {str(n): float(r) for n, r in self.identity_residuals.items()},
        }


@dataclass(frozen=True)
class ExoticDiagnostics:
    c: tuple
    xi: mpf
    pairing_checks: PairingReport
    x0_test_left: Optional[mpf]
    x0_test_right: Optional[mpf]
    lambda_: Optional[LambdaReport]
    id_sum: mpf
    id_defect: mpf
    xi_check: XiCheck
    p_xkappa: Optional[AtomicMeasure] = None

    @property
    def x0_test_margin(self):
        if self.x0_test_left is None:
            return None
        return self.x0_test_left - self.x0_test_right

    def to_dict(self) -> dict:
        return {
            "c": [to_json_number(x) for x in self.c],
            "xi": to_json_number(self.xi),
            "xi_check": self.xi_check.to_dict(),
            "pairing_checks": self.pairing_checks.to_dict(),
            "x0_test_left": None if self.x0_test_left is None else to_json_number(self.x0_test_left),
            "x0_test_right": None if self.x0_test_right is None else to_json_number(self.x0_test_right),
            "x0_test_margin": None if self.x0_test_left is None else to_json_number(self.x0_test_margin),
            "lambda": None if self.lambda_ is None else self.lambda_.to_dict(),
            "id_sum": to_json_number(self.id_sum),
            "id_defect": to_json_number(self.id_defect),
        }


def xi_check(model: WeightedGraphModel, seeds, nu: Optional[AtomicMeasure] = None, samples: Sequence[int] = range(11)) -> XiCheck:
    """xi = mu(x_0)/mu(x_k) - sum_i (mu(x_{i,1})/mu(x_k)) int (t^(k+1)-1)^-1 dP_i and the moment identity.

    The identity is h_n(x_k) = xi + sum_i (mu(x_{i,1})/mu(x_k)) int t^(n+k)/(t^(k+1)-1) dP_i.
    """
    k = model.kappa
    mu_k = model.weight(Circuit(k))
    mu0 = model.weight(Circuit(0))
    ws = {i: model.weight(Branch(i, 1)) for i in model.shape.branches}
    xi = mu0 / mu_k - mpmath.fsum(ws[i] / mu_k * integrate(seeds[i], lambda t: 1 / (t ** (k + 1) - 1)) for i in ws)
    res = {}
    for n in samples:
        try:
            h = h_n(model, Circuit(k), n).value
        except TruncationExhausted:
            continue
        rhs = xi + mpmath.fsum(
            ws[i] / mu_k * integrate(seeds[i], lambda t: t ** (n + k) / (t ** (k + 1) - 1)) for i in ws
        )
        res[n] = abs(h - rhs) / abs(h)
    return XiCheck(xi, None if nu is None else -nu.mass_at(ONE), res)


def build_exotic(
    nu: AtomicMeasure,
    tau: AtomicMeasure,
    partition: Partition,
    kappa: int,
    mu_xkappa=1,
    branch_depth: int = 12,
    moment_depth: int = 8,
):
    """Glue the pair (nu, tau) onto the graph; returns (model, seeds, diagnostics).

    P(x_kappa) = nu - nu({1}) delta_1 is kept on ``diagnostics.p_xkappa``.
    """
    gs = validate_pairing(nu, tau, kappa, moment_depth)
    if not gs.passed:
        raise GsViolated("; ".join(gs.messages) or "gs conditions fail")
    partition.validate(len(tau.atoms))
    k = kappa
    mu_k = mpf(mu_xkappa)
    dens = lambda t: (t ** (k + 1) - 1) / t**k
    c, seeds, mu = [], {}, {}
    for b in range(len(partition.blocks)):
        blk = _block_measure(tau, partition, b)
        ci = 1 / integrate(blk, dens)
        i = b + 1
        # on the tail (t^(k+1)-1)/t^k <= t
        seeds[i] = reweight(blk, lambda t, ci=ci: ci * dens(t), ci, 1)
        c.append(ci)
        w1 = mu_k / ci
        for j in range(1, branch_depth + 1):
            mu[Branch(i, j)] = w1 * moment(seeds[i], j - 1).value
    nu1 = nu.mass_at(ONE)
    P_kappa = remove_atoms(nu, {ONE})
    mu[Circuit(k)] = mu_k
    for r in range(k):
        val = mu_k * (integrate(tau, lambda t, r=r: t ** (-(k - r))) - nu1)
        if not val > 0:
            raise GsViolated(f"weight of x_{r} would be {val}")
        mu[Circuit(r)] = val
    eta_tail = None
    if partition.tail_block is None:
        if not partition.all_singletons:
            raise ValueError("a partition without tail block must consist of singletons")
        eta_tail = MeasureDiracTail.from_measure(tau, mu_k, k)
        shape = GraphShape(INF, k, branch_depth, len(partition.blocks))
    else:
        shape = GraphShape(len(partition.blocks), k, branch_depth)
    model = WeightedGraphModel(shape, mu, seeds, eta_tail, metadata={"builder": "build_exotic"})
    xc = xi_check(model, seeds, nu)
    _, _, id_sum = extension_conditions(model, seeds, depth=0)
    left = right = lam = None
    if k == 0:
        lam = lambda_functional(tau, partition)
        I = integrate(tau, lambda t: t - 1)
        left, right = lam.value, I / (1 + I)
    diag = ExoticDiagnostics(tuple(c), xc.xi, gs, left, right, lam, id_sum, id_sum - 1, xc, P_kappa)
    return model, seeds, diag


# ---------------------------------------------------------------- homothety search


@dataclass(frozen=True)
class FiniteM:
    m: int


@dataclass(frozen=True)
class FullSum:
    pass


@dataclass(frozen=True)
class Kappa:
    k: int


Mode = Union[FiniteM, FullSum, Kappa]


def scaled(beta: AtomicMeasure, a) -> AtomicMeasure:
    """beta pushed forward by t -> (t + a)/a."""
    return pushforward(beta, Homothety(1 / mpf(a), a))


def scaling_margin(beta: AtomicMeasure, mode: Mode, a) -> mpf:
    """Signed margin of the inequality each mode asks for; positive means it holds."""
    b = scaled(beta, a)
    if isinstance(mode, Kappa):
        return 1 + integrate(b, lambda t: t ** (-mode.k)) - total_mass(b).value
    m = len(b.atoms) if isinstance(mode, FullSum) else mode.m
    lhs = mpmath.fsum((x.location - 1) / x.location * x.mass for x in b.atoms[:m])
    I = integrate(b, lambda t: t - 1)
    return lhs - I / (1 + I)


def com2_sum(beta: AtomicMeasure, m: int, a) -> mpf:
    """sum_{i<=m} theta_i/(a + theta_i) beta({theta_i}), the unscaled form of the left side."""
    a = mpf(a)
    return mpmath.fsum(x.location / (a + x.location) * x.mass for x in beta.atoms[:m])


def com3_rhs(beta: AtomicMeasure, a) -> mpf:
    """m_1/(a + m_1), the unscaled form of the right side."""
    m1 = moment(beta, 1).value
    return m1 / (mpf(a) + m1)


def default_grid() -> list[mpf]:
    return [mpf(10) ** (-4 + 8 * mpf(i) / 399) for i in range(400)]


def _pow2_below(x) -> mpf:
    return mpf(2) ** int(mpmath.floor(mpmath.log(x, 2)))


def _pow2_above(x) -> mpf:
    return mpf(2) ** int(mpmath.ceil(mpmath.log(x, 2)))


def _bisect(f, lo, hi, steps=60):
    """f(lo) and f(hi) differ; returns the endpoint pair after geometric bisection."""
    flo = f(lo)
    for _ in range(steps):
        mid = mpmath.sqrt(lo * hi)
        if f(mid) == flo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def scaling_search(beta: AtomicMeasure, mode: Mode, grid: Optional[Sequence] = None) -> mpf:
    """A homothety parameter a at which the mode's inequality holds, re-verified.

    FiniteM/FullSum hold on an initial interval (0, a_1): the boundary is
    bracketed on the grid, bisected, and a is the largest power of two below
    it.  Kappa holds on (a_3, inf) and a is the smallest power of two above
    the boundary.  Powers of two keep t -> (t + a)/a exact at t = 0.
    """
    if total_mass(beta).value <= 1:
        raise ParameterOutOfRange("beta must have total mass above 1")
    if inf_support(beta) <= 0:
        raise ParameterOutOfRange("beta must live on (0, inf)")
    grid = sorted(mpf(g) for g in (default_grid() if grid is None else grid))

    def ok(a):
        return scaling_margin(beta, mode, a) > 0

    flags = [ok(a) for a in grid]
    if isinstance(mode, Kappa):
        if not flags[-1]:
            raise NotFound("Kappa inequality fails at the top of the grid")
        first = len(flags) - 1
        while first > 0 and flags[first - 1]:
            first -= 1
        boundary = grid[0] if first == 0 else _bisect(ok, grid[first - 1], grid[first])[1]
        a = _pow2_above(boundary)
        for _ in range(60):
            if ok(a):
                return a
            a *= 2
        raise NotFound("no power of two above the boundary passes")
    if not flags[0]:
        raise NotFound("inequality fails at the bottom of the grid")
    last = 0
    while last + 1 < len(flags) and flags[last + 1]:
        last += 1
    boundary = grid[-1] if last == len(flags) - 1 else _bisect(ok, grid[last], grid[last + 1])[0]
    a = _pow2_below(boundary)
    for _ in range(60):
        if ok(a):
            return a
        a /= 2
    raise NotFound("no power of two below the boundary passes")


# ---------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class Source:
    kind: str
    a: Optional[float] = None
    q: Optional[float] = None

    @classmethod
    def parse(cls, s: Union[str, "Source"]) -> "Source":
        if isinstance(s, Source):
            return s
        s = s.strip().lower()
        if s == "quartic":
            return cls("quartic")
        if s.startswith("asc:"):
            a, q = (float(x) for x in s[4:].split(","))
            return cls("asc", a, q)
        raise ValueError(f"unknown source {s!r}; use 'quartic' or 'asc:a,q'")

    def __str__(self):
        return "quartic" if self.kind == "quartic" else f"asc:{self.a},{self.q}"


def source_pair(source: Source, atom_count: Optional[int] = None) -> tuple[AtomicMeasure, AtomicMeasure, str]:
    """(zeta, rho, provenance): zeta has an atom at 0, rho lives on (0, inf)."""
    if source.kind == "quartic":
        z, r = quartic_pair() if atom_count is None else quartic_pair(atom_count)
        return z, r, "quartic birth-and-death pair (N-extremal, same moment sequence; trusted)"
    a, q = source.a, source.q
    if not a > 1:
        raise ParameterOutOfRange("the Al-Salam--Carlitz source needs a > 1")
    if not euler_predicate(a, q) > 0:
        raise EulerPredicateFailed(f"(q/a;q)_inf + (aq;q)_inf <= 1 at a={a}, q={q}")
    p = QPair(a, q)
    kw = {} if atom_count is None else {"atom_count": atom_count}
    shift = Homothety(1, -1)
    z = pushforward(asc_beta_measure(p, **kw), shift)
    r = pushforward(asc_gamma_measure(p, **kw), shift)
    return z, r, "Al-Salam--Carlitz pair shifted by -1 (Krein/Friedrichs roles trusted, not verified)"


@dataclass
class PipelineResult:
    model: WeightedGraphModel
    diagnostics: ExoticDiagnostics
    report: dict
    nu: AtomicMeasure
    tau: AtomicMeasure
    partition: Partition
    a: mpf
    seeds: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.model, self.diagnostics, self.report))


def exotic_pipeline(
    eta,
    source: Union[str, Source] = "quartic",
    atom_count: Optional[int] = None,
    kappa: int = 0,
    mu_xkappa=1,
    hankel_order: int = 4,
    branch_depth: int = 12,
) -> PipelineResult:
    """Full construction: source pair, scaling, homothety search, partition, build, report."""
    src = Source.parse(source)
    zeta, rho, provenance = source_pair(src, atom_count)
    z0 = zeta.mass_at(mpf(0))
    if not 0 < z0 < 1:
        raise ParameterOutOfRange("zeta must have an atom at 0 of mass in (0, 1)")
    r = 1 / (1 - z0)
    alpha, beta = scale_mass(zeta, r), scale_mass(rho, r)
    beta_theta1 = beta.atoms[0].mass
    if not beta_theta1 > 1:
        raise ParameterOutOfRange("the smallest atom of beta must carry mass above 1")
    if kappa >= 1:
        mode: Mode = Kappa(kappa)
    elif eta == INF:
        mode = FullSum()
    else:
        mode = FiniteM(max(int(eta) - 1, 1))
    a = scaling_search(beta, mode)
    h = Homothety(1 / a, a)
    nu, tau = pushforward(alpha, h), pushforward(beta, h)
    if eta == INF:
        partition = canonical_partitions(tau, INF)
    elif eta == 1:
        partition = Partition((tuple(range(len(tau.atoms))),), 0)
    else:
        partition = canonical_partitions(tau, int(eta))
    model, seeds, diag = build_exotic(nu, tau, partition, kappa, mu_xkappa, branch_depth)
    hyp = hyponormality(model)
    sample = [Circuit(r_) for r_ in range(kappa + 1)]
    for i in list(model.shape.branches)[:5]:
        sample += [Branch(i, 1), Branch(i, 2)]
    evidence = {}
    for v in sample:
        try:
            rep = hankel_report(h_sequence(model, v, 2 * hankel_order + 2))
        except TruncationExhausted:
            continue
        evidence[str(v)] = {"verdict": rep.verdict, "max_passing_order": rep.max_passing_order}
    report = {
        "source": str(src),
        "provenance": provenance,
        "eta": "inf" if eta == INF else int(eta),
        "kappa": kappa,
        "a": to_json_number(a),
        "r": to_json_number(r),
        "beta_theta1": to_json_number(beta_theta1),
        "nu_at_1": to_json_number(nu.mass_at(ONE)),
        "hyponormality": {
            "verdict": hyp.verdict,
            "slack_x0": to_json_number(hyp.per_vertex_slack[Circuit(0)]),
            "min_slack": to_json_number(hyp.min_slack),
        },
        "diagnostics": diag.to_dict(),
        "hankel_evidence": evidence,
        "evidence_flag": TRUNCATION_FLAG,
        "unproven_hypotheses": list(UNPROVEN_HYPOTHESES)
        + ["nu and tau are N-extremal measures of one indeterminate Stieltjes moment sequence"],
    }
    return PipelineResult(model, diag, report, nu, tau, partition, a, seeds)
