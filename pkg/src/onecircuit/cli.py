"""Command line scenario runner.

Every command prints a JSON report on stdout (and to ``--report`` if given).
Exit status: 0 success, 1 usage or input error, 2 quantitative verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional

import mpmath
from mpmath import mpf

from . import __version__
from .comp_op import (
    CCFamily,
    WeightedGraphModel,
    build_from_target_h0,
    build_subnormal,
    derivative_table,
    hyponormality,
    norm_bound,
    verify_cc,
)
from .comp_op.diagnostics import h_sequence
from .comp_op.tails import tail_from_dict
from .errors import OneCircuitError
from .exotic import Partition, Source, canonical_partitions, exotic_pipeline, lambda_functional
from .graph import INF, parse_vertex
from .measures import AtomicMeasure, Homothety, moment, scale_mass, total_mass
from .moments import MomentSequence, carleman_diagnostic, hankel_report, shift_dominance, transform_T
from .precision import from_json_number, set_precision, to_json_number
from .qspecial import (
    DEFAULT_ASC_ATOMS,
    DEFAULT_QUARTIC_ATOMS,
    QPair,
    asc_beta_measure,
    asc_gamma_measure,
    asc_moment,
    euler_predicate,
    euler_threshold,
    pentagonal_margin,
    quartic_K0,
    quartic_pair,
)

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write(path: Optional[str], obj) -> None:
    if path:
        Path(path).write_text(_dump(obj))


def _load(path: str):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _positive(kind):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError("must be positive")
        return v

    return conv


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _eta(s):
    if s.lower() in ("inf", "infinity"):
        return INF
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("eta must be a positive integer or inf")
    return v


def _sequence(d) -> MomentSequence:
    if isinstance(d, list):
        return MomentSequence(tuple(from_json_number(v) for v in d))
    if "values" in d:
        return MomentSequence.from_dict(d)
    raise UsageError("sequence file must hold a list or an object with 'values'")


def _measure(d) -> AtomicMeasure:
    if "atoms" in d:
        return AtomicMeasure.from_dict(d)
    if "dirac" in d:
        return AtomicMeasure.from_pairs([(d["dirac"], d.get("mass", 1))])
    raise UsageError("measure must have 'atoms' or 'dirac'")


# ---------------------------------------------------------------- commands


def cmd_asc_measure(args) -> tuple[dict, int]:
    p = QPair(args.a, args.q)
    atoms = args.atoms or DEFAULT_ASC_ATOMS
    m = asc_beta_measure(p, atoms) if args.kind == "beta" else asc_gamma_measure(p, atoms)
    _write(args.out, m.to_dict())
    rows = []
    for n in range(args.max_n + 1):
        b = moment(m, n)
        exact = asc_moment(p, n)
        rows.append({
            "n": n,
            "atom_sum": to_json_number(b.value),
            "error_bound": to_json_number(b.error),
            "closed_form": to_json_number(exact),
            "rel_diff": float(abs(b.value - exact) / abs(exact)),
        })
    bad = [r["n"] for r in rows if r["rel_diff"] > args.tol]
    report = {
        "command": "asc-measure",
        "kind": args.kind,
        "a": args.a,
        "q": args.q,
        "atoms": len(m),
        "tail_degree": m.tail_degree,
        "tail_mass_bound": to_json_number(m.tail_mass_bound),
        "moments": rows,
        "mismatched_orders": bad,
    }
    return report, EXIT_VERIFY if bad else EXIT_OK


def cmd_quartic(args) -> tuple[dict, int]:
    atoms = args.atoms or DEFAULT_QUARTIC_ATOMS
    zeta, rho = quartic_pair(atoms)
    _write(args.out, {"zeta": zeta.to_dict(), "rho": rho.to_dict()})
    K0 = quartic_K0()
    z0 = zeta.mass_at(mpf(0))
    target = mpmath.pi / K0**2
    r = 1 / (1 - z0)
    beta1 = scale_mass(rho, r).atoms[0]
    rel = abs(z0 - target) / target
    report = {
        "command": "quartic",
        "atoms": atoms,
        "K0": to_json_number(K0),
        "zeta_at_0": to_json_number(z0),
        "pi_over_K0_squared": to_json_number(target),
        "zeta_at_0_rel_diff": float(rel),
        "zeta_total_mass": to_json_number(total_mass(zeta).value),
        "zeta_tail_mass_bound": to_json_number(zeta.tail_mass_bound),
        "rho_total_mass": to_json_number(total_mass(rho).value),
        "rho_tail_mass_bound": to_json_number(rho.tail_mass_bound),
        "r": to_json_number(r),
        "theta1": to_json_number(beta1.location),
        "beta_theta1": to_json_number(beta1.mass),
    }
    return report, EXIT_VERIFY if rel > args.tol else EXIT_OK


def cmd_build_subnormal(args) -> tuple[dict, int]:
    cfg = _load(args.config)
    kappa = int(cfg.get("kappa", 0))
    if kappa < 0:
        raise UsageError("kappa must be nonnegative")
    if "target_h0" in cfg:
        model = build_from_target_h0(_sequence(cfg["target_h0"]), kappa, cfg.get("mu_x0", 1))
        _write(args.out, model.to_dict())
        nb = norm_bound(model)
        report = {
            "command": "build-subnormal",
            "mode": "target_h0",
            "kappa": kappa,
            "norm_bound": nb.to_dict(),
        }
        return report, EXIT_OK
    seeds_cfg = cfg.get("seeds")
    if not seeds_cfg:
        raise UsageError("config needs 'seeds' or 'target_h0'")
    seeds = [_measure(s["measure"]) for s in seeds_cfg]
    weights = [from_json_number(s.get("weight", 1)) for s in seeds_cfg]
    mu0 = cfg.get("mu_x0")
    model, family, rep = build_subnormal(
        seeds,
        kappa,
        weights,
        None if mu0 is None else from_json_number(mu0),
        int(cfg.get("branch_depth", 12)),
        tail_from_dict(cfg.get("eta_tail")),
        args.tol,
    )
    _write(args.out, model.to_dict())
    _write(args.family, family.to_dict())
    report = {
        "command": "build-subnormal",
        "mode": "seeds",
        "kappa": kappa,
        "build": rep.to_dict(),
        "cc_passed": rep.cc_residual <= args.tol,
    }
    return report, EXIT_OK if report["cc_passed"] else EXIT_VERIFY


def cmd_build_exotic(args) -> tuple[dict, int]:
    try:
        src = Source.parse(args.source)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = exotic_pipeline(args.eta, src, args.atoms, kappa=args.kappa)
    _write(args.out, res.model.to_dict())
    _write(args.measures, {"nu": res.nu.to_dict(), "tau": res.tau.to_dict(), "partition": res.partition.to_dict()})
    report = dict(res.report)
    report["command"] = "build-exotic"
    xi_ok = res.diagnostics.xi_check.passed()
    report["xi_matches_minus_nu_at_1"] = xi_ok
    return report, EXIT_OK if xi_ok else EXIT_VERIFY


def cmd_verify_cc(args) -> tuple[dict, int]:
    model = WeightedGraphModel.from_dict(_load(args.model))
    try:
        family = CCFamily.from_dict(_load(args.family))
    except ValueError as exc:
        report = {"command": "verify-cc", "passed": False, "error": str(exc)}
        return report, EXIT_VERIFY
    ver = verify_cc(model, family, args.tol)
    report = {"command": "verify-cc", **ver.to_dict()}
    return report, EXIT_OK if ver.passed else EXIT_VERIFY


def cmd_check_hyponormal(args) -> tuple[dict, int]:
    model = WeightedGraphModel.from_dict(_load(args.model))
    rep = hyponormality(model, args.tol, args.depth)
    return {"command": "check-hyponormal", **rep.to_dict()}, EXIT_OK


def emit_tables(model: WeightedGraphModel, max_n: int, fmt: str = "csv", depth: Optional[int] = None) -> str:
    """h_n table: one row per n, vertices in canonical order, error bounds alongside.

    Cells the truncation cannot supply are written as NA.  A final ``slack``
    row carries the hyponormality slack per vertex.
    """
    verts = list(model.shape.vertices(depth))
    table = derivative_table(model, max_n, verts)
    try:
        slack = hyponormality(model, depth=depth).per_vertex_slack
    except OneCircuitError:
        slack = {}
    names = [str(v) for v in verts]

    def cell(b):
        if b is None:
            return "NA", "NA"
        return mpmath.nstr(b.value, 17), mpmath.nstr(b.error, 3)

    if fmt == "json":
        rows = []
        for n in range(max_n + 1):
            row = {}
            for v, name in zip(verts, names):
                b = table[(v, n)]
                row[name] = None if b is None else {"value": to_json_number(b.value), "error": to_json_number(b.error)}
            rows.append({"n": n, "h": row})
        out = {
            "vertices": names,
            "rows": rows,
            "slack": {str(v): to_json_number(slack[v]) for v in verts if v in slack},
        }
        return _dump(out)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["n"]
    for name in names:
        header += [name, f"{name}_err"]
    w.writerow(header)
    for n in range(max_n + 1):
        row = [n]
        for v in verts:
            row += list(cell(table[(v, n)]))
        w.writerow(row)
    row = ["slack"]
    for v in verts:
        row += [mpmath.nstr(slack[v], 17), ""] if v in slack else ["NA", ""]
    w.writerow(row)
    return buf.getvalue()


def cmd_h_table(args) -> tuple[dict, int]:
    model = WeightedGraphModel.from_dict(_load(args.model))
    text = emit_tables(model, args.max_n, args.format, args.depth)
    if args.csv:
        Path(args.csv).write_text(text)
    report = {
        "command": "h-table",
        "format": args.format,
        "max_n": args.max_n,
        "vertices": [str(v) for v in model.shape.vertices(args.depth)],
        "path": args.csv,
    }
    if not args.csv:
        report["table"] = text
    return report, EXIT_OK


def _model_sequence(args) -> MomentSequence:
    if args.seq:
        return _sequence(_load(args.seq))
    if args.model and args.vertex:
        model = WeightedGraphModel.from_dict(_load(args.model))
        try:
            v = parse_vertex(args.vertex)
        except Exception as exc:
            raise UsageError(str(exc)) from exc
        return h_sequence(model, v, args.max_n + 1)
    raise UsageError("give --seq, or --model with --vertex")


def cmd_hankel(args) -> tuple[dict, int]:
    g = _model_sequence(args)
    rep = hankel_report(g, args.tol)
    report = {"command": "hankel", "length": len(g), **rep.to_dict(), "max_passing_order": rep.max_passing_order}
    if args.shift_dominance:
        report["shift_dominance"] = shift_dominance(g, args.tol).to_dict()
    return report, EXIT_OK


def cmd_carleman(args) -> tuple[dict, int]:
    g = _model_sequence(args)
    return {"command": "carleman", **carleman_diagnostic(g).to_dict()}, EXIT_OK


def cmd_transform(args) -> tuple[dict, int]:
    g = _sequence(_load(args.seq))
    if args.scale == 0:
        raise UsageError("scale must be nonzero")
    out = transform_T(g, Homothety(from_json_number(args.scale), from_json_number(args.shift)), args.direction)
    _write(args.out, out.to_dict())
    return {"command": "transform", "direction": args.direction, **out.to_dict()}, EXIT_OK


def _partition(spec, tau: AtomicMeasure) -> Partition:
    if isinstance(spec, str):
        spec = {"kind": spec}
    if "blocks" in spec:
        return Partition.from_dict(spec)
    kind = spec.get("kind")
    n = len(tau.atoms)
    if kind == "trivial":
        return Partition((tuple(range(n)),), 0)
    if kind == "singletons":
        return canonical_partitions(tau, INF)
    if kind == "canonical":
        eta = spec.get("eta", 2)
        eta = INF if eta in ("inf", "infinity") else int(eta)
        return canonical_partitions(tau, eta, spec.get("k"))
    raise UsageError("partition spec needs 'blocks' or kind trivial|singletons|canonical")


def cmd_lambda(args) -> tuple[dict, int]:
    d = _load(args.tau)
    tau = _measure(d["tau"] if "tau" in d else d)
    part = _partition(_load(args.partition), tau)
    rep = lambda_functional(tau, part)
    report = {"command": "lambda", "partition": part.to_dict(), **rep.to_dict()}
    return report, EXIT_OK if rep.within_bounds else EXIT_VERIFY


def cmd_euler_threshold(args) -> tuple[dict, int]:
    rep = euler_threshold(args.a, report=True)
    q0 = rep.q0
    check = euler_predicate(args.a, q0 / 2)
    report = {
        "command": "euler-threshold",
        "a": args.a,
        "q0": to_json_number(q0),
        "first_failure": None if rep.first_failure is None else to_json_number(rep.first_failure),
        "predicate_at_half_q0": to_json_number(check),
        "pentagonal_margin_at_half_q0": to_json_number(pentagonal_margin(q0 / 2)),
        "grid_points": rep.tested,
        "late_passes": len(rep.late_passes),
        "pentagonal_violations": len(rep.pentagonal_violations),
    }
    return report, EXIT_OK if check > 0 else EXIT_VERIFY


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--precision", choices=["double", "high"], default="high")
    common.add_argument("--tol", type=_positive(float), default=None)
    common.add_argument("--max-n", type=_nonneg_int, default=12)
    common.add_argument("--atoms", type=_positive(int), default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--report", default=None)

    p = _Parser(prog="onecircuit", description="Composition operators on one-circuit graphs")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_, tol, files=()):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func, default_tol=tol, file_args=files)
        if files:
            # input files may also be given positionally, in this order
            sp.add_argument("inputs", nargs="*", metavar=" ".join(f.upper() for f in files))
        return sp

    sp = add("asc-measure", cmd_asc_measure, "Al-Salam--Carlitz orthogonality measure", 1e-10)
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--which", "--kind", dest="kind", choices=["beta", "gamma"], default="beta")

    add("quartic", cmd_quartic, "quartic birth-and-death pair and its constants", 1e-12)

    sp = add("build-subnormal", cmd_build_subnormal, "weights and consistent family from seeds", 1e-10, ("config",))
    sp.add_argument("--config", default=None)
    sp.add_argument("--family", default=None)

    sp = add("build-exotic", cmd_build_exotic, "non-hyponormal construction", 1e-10)
    sp.add_argument("--eta", type=_eta, default=2)
    sp.add_argument("--kappa", type=_nonneg_int, default=0)
    sp.add_argument("--source", default="quartic")
    sp.add_argument("--measures", default=None, help="write nu, tau and the partition here")

    sp = add("verify-cc", cmd_verify_cc, "check a family against the consistency condition", 1e-10, ("model", "family"))
    sp.add_argument("--model", default=None)
    sp.add_argument("--family", default=None)

    sp = add("check-hyponormal", cmd_check_hyponormal, "hyponormality slack at every vertex", 1e-12, ("model",))
    sp.add_argument("--model", default=None)
    sp.add_argument("--depth", type=_nonneg_int, default=None)

    sp = add("h-table", cmd_h_table, "table of h_n over the truncated vertex set", 1e-12, ("model",))
    sp.add_argument("--model", default=None)
    sp.add_argument("--csv", default=None, help="write the table here")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--depth", type=_nonneg_int, default=None)

    for name, func, help_ in (
        ("hankel", cmd_hankel, "Hankel positivity of a sequence"),
        ("carleman", cmd_carleman, "Carleman partial sums and growth heuristic"),
    ):
        sp = add(name, func, help_, None)
        sp.add_argument("--seq", default=None)
        sp.add_argument("--model", default=None)
        sp.add_argument("--vertex", default=None)
        if name == "hankel":
            sp.add_argument("--shift-dominance", action="store_true")

    sp = add("transform", cmd_transform, "moment sequence of a pushforward under t -> s(t + a)", None)
    sp.add_argument("--seq", required=True)
    sp.add_argument("--scale", type=float, required=True)
    sp.add_argument("--shift", type=float, required=True)
    sp.add_argument("--direction", choices=["forward", "inverse"], default="forward")

    sp = add("lambda", cmd_lambda, "partition functional of tau", None, ("tau", "partition"))
    sp.add_argument("--tau", default=None)
    sp.add_argument("--partition", default=None)

    sp = add("euler-threshold", cmd_euler_threshold, "largest q keeping the Euler predicate positive", None)
    sp.add_argument("--a", type=float, required=True)
    return p


def _fill_inputs(args) -> None:
    names = args.file_args
    if not names:
        return
    rest = list(args.inputs)
    for name in names:
        if getattr(args, name) is None and rest:
            setattr(args, name, rest.pop(0))
    if rest:
        raise UsageError(f"unexpected arguments: {' '.join(rest)}")
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing input: " + ", ".join("--" + n for n in missing))


def run_scenario(argv) -> tuple[dict, int, Optional[str]]:
    """Parse ``argv`` and run one command; returns (report, exit code, report path)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        raise UsageError("a command is required")
    _fill_inputs(args)
    set_precision(args.precision)
    if args.tol is None:
        args.tol = args.default_tol
    report, code = args.func(args)
    report["precision"] = args.precision
    return report, code, args.report


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        report, code, report_path = run_scenario(argv)
    except UsageError as exc:
        sys.stderr.write(_dump({"error": "usage", "message": str(exc)}))
        return EXIT_USAGE
    except (OneCircuitError, ValueError, KeyError) as exc:
        sys.stderr.write(_dump({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_USAGE
    text = _dump(report)
    sys.stdout.write(text)
    if report_path:
        Path(report_path).write_text(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
