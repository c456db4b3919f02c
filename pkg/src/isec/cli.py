"""``isec`` command-line front end.

Exit codes: 0 verified, 1 bad input or failed precondition, 2 falsified (a
witness is included in the report).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import generators as gen
from . import linear as lin
from . import oracles, qi, regularity
from .errors import InfeasibleError, IsecError
from .qi import QIConstants
from .serialize import (
    dumps,
    fibration_from_json,
    fibration_to_json,
    linear_from_json,
    linear_section_from_json,
    linear_section_to_json,
    linear_to_json,
    read_json,
    section_from_json,
    section_to_json,
    to_jsonable,
)

EXIT_OK, EXIT_INPUT, EXIT_FALSIFIED = 0, 1, 2


class Falsified(Exception):
    """Carries a report whose verdict is negative."""

    def __init__(self, report: dict):
        super().__init__("falsified")
        self.report = report


def _number(text: str):
    """Parse ``"3"``, ``"1.5"`` or ``"3/2"`` keeping integers and fractions exact."""
    from fractions import Fraction

    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return int(v) if v.denominator == 1 else v if "/" in text else float(text)


def _radii(text: str) -> list:
    return [_number(t) for t in text.split(",") if t.strip()]


def _load_instance(path):
    doc = read_json(path)
    return fibration_from_json(doc), doc


def _load_section(path, fib):
    doc = read_json(path)
    return section_from_json(doc, fib), doc


def _tol(args, obj):
    """Exact instances compare exactly; the tolerance only applies to floats."""
    return None if obj.exact else args.tolerance


def _constants(args, phi) -> QIConstants:
    return QIConstants(phi.coerce(args.L), phi.coerce(args.M))


# Subcommands. Each returns a report dict or raises Falsified / IsecError.


def cmd_validate(args) -> dict:
    fib, doc = _load_instance(args.instance)
    return {
        "verdict": "valid",
        "n_points": fib.space.n,
        "n_labels": len(fib.labels),
        "exact": fib.space.exact,
        "fiber_diameter_bound": fib.fiber_diameter_bound(),
        "inputs": {"instance": doc},
    }


def cmd_check(args) -> dict:
    fib, idoc = _load_instance(args.instance)
    phi, sdoc = _load_section(args.section, fib)
    c = _constants(args, phi)
    witness = qi.qi_violation(phi, c, _tol(args, phi))
    frontier = qi.qi_frontier(phi)
    report = {
        "verdict": witness is None,
        "witness": witness,
        "constants": c.as_tuple(),
        "minimal_M_at_L": frontier(phi.coerce(c.L)),
        "frontier": frontier.to_json(),
        "inputs": {"instance": idoc, "section": sdoc},
    }
    try:
        report["minimal_L_at_M"] = frontier.min_L(phi.coerce(c.M))
    except InfeasibleError as exc:
        report["minimal_L_at_M"] = {"infeasible": exc.witness}
    if args.oracle:
        o_verdict = oracles.oracle_is_qi(phi, c.L, c.M, 0 if phi.exact else args.tolerance)
        o_min = oracles.oracle_minimal_M(phi, c.L)
        agree = o_verdict.value == (witness is None) and abs(
            float(o_min.value) - float(report["minimal_M_at_L"])
        ) <= (0 if phi.exact else 1e-9)
        report["oracle"] = {
            "verdict": o_verdict.value,
            "witness": o_verdict.witness,
            "minimal_M_at_L": o_min.value,
            "agrees": agree,
            "method": o_verdict.method,
        }
        if not agree:
            raise Falsified(report)
    if witness is not None:
        raise Falsified(report)
    return report


def cmd_frontier(args) -> dict:
    fib, idoc = _load_instance(args.instance)
    phi, sdoc = _load_section(args.section, fib)
    frontier = qi.qi_frontier(phi)
    report = {
        "verdict": True,
        "frontier": frontier.to_json(),
        "binding_at_1": frontier.binding(phi.coerce(1)),
        "inputs": {"instance": idoc, "section": sdoc},
    }
    if args.oracle:
        hi = 3 if frontier.L_flat is None else max(3, float(frontier.L_flat) + 1)
        steps = int(round((hi - 1) / 0.01))
        grid = [phi.coerce(1) + phi.coerce(k) / 100 for k in range(steps + 1)]
        scan = oracles.oracle_frontier_scan(phi, grid)
        tol = 0 if phi.exact else 1e-9
        worst = max(abs(float(frontier(L) - M)) for L, M in scan)
        report["oracle"] = {"samples": len(scan), "max_abs_diff": worst, "agrees": worst <= tol}
        if worst > tol:
            report["verdict"] = False
            raise Falsified(report)
    return report


def cmd_cones(args) -> dict:
    fib, idoc = _load_instance(args.instance)
    phi, sdoc = _load_section(args.section, fib)
    c = _constants(args, phi)
    witness = qi.cone_witness(phi, c, _tol(args, phi))
    qi_ok = qi.is_qi_section(phi, c, _tol(args, phi))
    report = {
        "verdict": witness is None,
        "witness": witness,
        "is_qi_section": qi_ok,
        "consistent": (witness is None) == qi_ok,
        "constants": c.as_tuple(),
        "inputs": {"instance": idoc, "section": sdoc},
    }
    if witness is not None or not report["consistent"]:
        raise Falsified(report)
    return report


def cmd_relative(args) -> dict:
    fib, idoc = _load_instance(args.instance)
    phi, pdoc = _load_section(args.phi, fib)
    psi, qdoc = _load_section(args.psi, fib)
    y_hat = _label(fib, args.base)
    c = _constants(args, phi)
    witness = qi.relative_violation(phi, psi, y_hat, c, args.strong, _tol(args, phi))
    frontier = qi.relative_frontier(phi, psi, y_hat, args.strong)
    report = {
        "verdict": witness is None,
        "witness": witness,
        "strong": args.strong,
        "constants": c.as_tuple(),
        "frontier": frontier.to_json(),
        "inputs": {"instance": idoc, "phi": pdoc, "psi": qdoc, "base": args.base},
    }
    if witness is not None:
        raise Falsified(report)
    return report


def cmd_relation(args) -> dict:
    fib, idoc = _load_instance(args.instance)
    loaded = [_load_section(p, fib) for p in args.section]
    y_hat = _label(fib, args.base)
    report = qi.strong_relation_check([s for s, _ in loaded], y_hat, _tol(args, fib))
    report["verdict"] = report["equivalence"]
    report["inputs"] = {"instance": idoc, "sections": [d for _, d in loaded], "base": args.base}
    if not report["verdict"]:
        raise Falsified(report)
    return report


def cmd_algebra(args) -> dict:
    """Convexity, sum and scalar-multiple checks on a linear instance."""
    fib = linear_from_json(read_json(args.instance))
    psi = linear_section_from_json(read_json(args.psi), fib)
    phi = linear_section_from_json(read_json(args.phi), fib)
    eta = linear_section_from_json(read_json(args.eta), fib)
    base = args.base
    L = float(args.L)
    c_phi = QIConstants(L, float(qi.relative_frontier(phi, psi, base)(L)))
    c_eta = QIConstants(L, float(qi.relative_frontier(eta, psi, base)(L)))
    checks = []
    for t in args.t:
        w = lin.convex_combination(phi, eta, t)
        pred = lin.convex_constants(t, c_phi, c_eta)
        checks.append(
            {
                "kind": "convex",
                "t": t,
                "predicted": pred.as_tuple(),
                "holds": qi.is_relative_qi(w, psi, base, pred, args.tolerance),
            }
        )
    w = lin.section_sum(phi, eta)
    two_psi = lin.scalar_multiple(2.0, psi)
    pred = lin.sum_constants(1.0, c_phi, 1.0, c_eta)
    checks.append(
        {
            "kind": "sum",
            "scale": w.scale,
            "predicted": pred.as_tuple(),
            "holds": qi.is_relative_qi(w, two_psi, base, pred, args.tolerance),
        }
    )
    for beta in args.beta:
        bphi = lin.scalar_multiple(beta, phi)
        bpsi = lin.scalar_multiple(beta, psi)
        pred = lin.scalar_constants(beta, c_phi)
        checks.append(
            {
                "kind": "scalar",
                "beta": beta,
                "scale": bphi.scale,
                "predicted": pred.as_tuple(),
                "holds": qi.is_relative_qi(bphi, bpsi, base, pred, args.tolerance),
            }
        )
    ell = fib.fiber_diameter_bound()
    if np.isfinite(ell):
        w = lin.section_sum(phi, eta)
        m1 = qi.minimal_M(w, 1.0)
        checks.append(
            {"kind": "bounded_fiber_sum", "ell": ell, "minimal_M_at_1": m1, "holds": m1 <= 2 * ell + 1e-9}
        )
    report = {
        "verdict": all(ch["holds"] for ch in checks),
        "relative_constants": {"phi": c_phi.as_tuple(), "eta": c_eta.as_tuple()},
        "checks": checks,
        "inputs": {
            "instance": linear_to_json(fib),
            "psi": linear_section_to_json(psi),
            "phi": linear_section_to_json(phi),
            "eta": linear_section_to_json(eta),
            "base": base,
        },
    }
    if not report["verdict"]:
        raise Falsified(report)
    return report


def cmd_regularity(args) -> dict:
    fib, idoc = _load_instance(args.instance)
    if fib.measure is None:
        fib = fib.with_measure()
    phi, pdoc = _load_section(args.phi, fib)
    psi, qdoc = _load_section(args.psi, fib)
    rep = regularity.regularity_report(phi, args.Q, args.r0, args.r_grid, args.L, args.M)
    transfer = regularity.transfer_regularity(psi, rep, args.L, args.M)
    inclusion = regularity.ball_inclusion_check(psi, QIConstants(psi.coerce(args.L), psi.coerce(args.M)), args.r_grid)
    report = {
        "verdict": transfer["holds"] and inclusion["holds"],
        "regularity": rep.to_json(),
        "transfer": transfer,
        "ball_inclusions": inclusion,
        "inputs": {"instance": idoc, "phi": pdoc, "psi": qdoc},
    }
    if not report["verdict"]:
        raise Falsified(report)
    return report


def cmd_generate(args) -> dict:
    out = Path(args.out_dir)
    rng = np.random.default_rng(args.seed)
    files = {}
    if args.kind == "linear":
        if not 1 <= args.k <= args.n:
            raise IsecError(f"need 1 <= k <= n, got k={args.k}, n={args.n}")
        A = np.array(args.A, dtype=float).reshape(args.k, args.n) if args.A else None
        if A is None:
            fib = gen.random_linear(rng, n=args.n, k=args.k, norm_kind=args.norm)
        else:
            grid = np.array(np.meshgrid(*[np.arange(args.lo, args.hi + 1)] * args.k)).reshape(args.k, -1).T
            fib = lin.LinearFibration(A, args.norm, grid.astype(float), 1.0, args.fiber_radius)
        files["instance.json"] = linear_to_json(fib)
        base = 0
        psi = lin.random_section(fib, rng)
        files["psi.json"] = linear_section_to_json(psi)
        files["phi.json"] = linear_section_to_json(lin.perturbed_section(psi, base, rng))
        files["eta.json"] = linear_section_to_json(lin.perturbed_section(psi, base, rng))
    else:
        if args.rows < 1 or args.cols < 1 or args.rows * args.cols > 10_000:
            raise IsecError("rows and cols must be positive with rows*cols <= 10000")
        if args.kind == "grid":
            if args.norm not in ("linf", "l1"):
                raise IsecError("grid norm must be linf or l1")
            fib = gen.grid(args.rows, args.cols, args.norm)
        else:
            fib = gen.cyclic(args.cols, args.rows, "l1" if args.norm == "l1" else "linf")
        files["instance.json"] = fibration_to_json(fib)
        files["identity_row.json"] = section_to_json(gen.identity_row(fib))
        files["zigzag.json"] = section_to_json(gen.zigzag(fib))
        rnd = gen.random_section(fib, rng)
        files["random.json"] = section_to_json(rnd)
    out.mkdir(parents=True, exist_ok=True)
    for name, doc in files.items():
        (out / name).write_text(dumps(doc), encoding="utf-8")
    return {"verdict": True, "kind": args.kind, "files": sorted(files)}


def cmd_report(args) -> dict:
    """Everything about one section: frontier, canonical constants, cones, oracle cross-check."""
    fib, idoc = _load_instance(args.instance)
    phi, sdoc = _load_section(args.section, fib)
    frontier = qi.qi_frontier(phi)
    L = phi.coerce(args.L)
    M = frontier(L)
    c = QIConstants(L, M)
    pairs = oracles.oracle_pairs(phi)
    o_min = oracles.oracle_minimal_M(phi, L, pairs)
    cone = qi.cone_witness(phi, c, _tol(args, phi))
    report = {
        "frontier": frontier.to_json(),
        "L": L,
        "minimal_M": M,
        "fiber_diameter_bound": fib.fiber_diameter_bound(),
        "cones_avoided_at_minimal": cone is None,
        "oracle_minimal_M": o_min.value,
        "oracle_confirmed": o_min.value == M if phi.exact else abs(float(o_min.value) - float(M)) <= 1e-9,
        "inputs": {"instance": idoc, "section": sdoc},
    }
    report["verdict"] = report["oracle_confirmed"] and report["cones_avoided_at_minimal"]
    if not report["verdict"]:
        raise Falsified(report)
    return report


def _label(fib, text):
    for y in fib.labels:
        if str(y) == str(text):
            return y
    raise IsecError(f"unknown label {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isec", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, default=1e-9, help="float comparison slack; exact instances ignore it")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("validate", cmd_validate, "validate an instance")
    sp.add_argument("--instance", required=True)

    sp = add("check", cmd_check, "decide (L, M)-quasi-isometry of a section")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--section", required=True)
    sp.add_argument("--L", type=_number, default=1)
    sp.add_argument("--M", type=_number, default=0)
    sp.add_argument("--oracle", action="store_true", help="cross-run the brute-force oracle")

    sp = add("frontier", cmd_frontier, "exact (L, M) frontier of a section")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--section", required=True)
    sp.add_argument("--oracle", action="store_true")

    sp = add("cones", cmd_cones, "cone-avoidance check of a section's graph")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--section", required=True)
    sp.add_argument("--L", type=_number, default=1)
    sp.add_argument("--M", type=_number, default=0)

    sp = add("relative", cmd_relative, "relative (pointed) quasi-isometry of phi w.r.t. psi")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--phi", required=True)
    sp.add_argument("--psi", required=True)
    sp.add_argument("--base", required=True, help="base label y_hat")
    sp.add_argument("--L", type=_number, default=1)
    sp.add_argument("--M", type=_number, default=0)
    sp.add_argument("--strong", action="store_true")

    sp = add("relation", cmd_relation, "equivalence-relation check for the strong relative condition")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--section", action="append", required=True)
    sp.add_argument("--base", required=True)

    sp = add("algebra", cmd_algebra, "convexity / sum / scalar checks on a linear instance")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--psi", required=True)
    sp.add_argument("--phi", required=True)
    sp.add_argument("--eta", required=True)
    sp.add_argument("--base", type=int, default=0)
    sp.add_argument("--L", type=float, default=1.0)
    sp.add_argument("--t", type=float, action="append", default=None)
    sp.add_argument("--beta", type=float, action="append", default=None)

    sp = add("regularity", cmd_regularity, "Ahlfors-David regularity transfer between two sections")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--phi", required=True)
    sp.add_argument("--psi", required=True)
    sp.add_argument("--Q", type=_number, default=1)
    sp.add_argument("--r0", type=_number, default=1)
    sp.add_argument("--r-grid", dest="r_grid", type=_radii, default=[2, 3, 4, 5])
    sp.add_argument("--L", type=_number, default=1)
    sp.add_argument("--M", type=_number, default=0)

    sp = add("generate", cmd_generate, "write a seeded instance and canonical sections")
    sp.add_argument("kind", choices=["grid", "cyclic_product", "linear"])
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--rows", type=int, default=3)
    sp.add_argument("--cols", type=int, default=3)
    sp.add_argument("--norm", default=None)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--A", type=float, nargs="+", default=None)
    sp.add_argument("--lo", type=int, default=-5)
    sp.add_argument("--hi", type=int, default=5)
    sp.add_argument("--fiber-radius", dest="fiber_radius", type=float, default=None)

    sp = add("report", cmd_report, "full analysis of one section")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--section", required=True)
    sp.add_argument("--L", type=_number, default=1)
    return p


def _render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(report)
    flat = to_jsonable(report)
    lines = []
    for key in sorted(flat):
        if key == "inputs":
            continue
        val = flat[key]
        if isinstance(val, (dict, list)):
            val = json.dumps(val, sort_keys=True, separators=(",", ":"))
        lines.append(f"{key}: {val}")
    return "\n".join(lines) + "\n"


def _finalize(args, report: dict) -> dict:
    report = dict(report)
    report["command"] = args.command
    report["seed"] = args.seed
    report["tolerance"] = args.tolerance
    return report


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "norm", "unset") is None:
        args.norm = "l2" if args.kind == "linear" else "linf"
    if args.command == "algebra":
        args.t = args.t or [0.0, 0.25, 0.5, 0.75, 1.0]
        args.beta = args.beta or [-1.0, 2.0]
    if not args.tolerance > 0:
        parser.error("--tolerance must be positive")
    threads = os.environ.get("ISEC_THREADS")
    if threads is not None and not (threads.isdigit() and int(threads) >= 1):
        parser.error(f"ISEC_THREADS must be a positive integer, got {threads!r}")
    code = EXIT_OK
    try:
        report = args.func(args)
    except Falsified as exc:
        report, code = exc.report, EXIT_FALSIFIED
    except IsecError as exc:
        report, code = {"verdict": "error", "error": str(exc), "error_type": type(exc).__name__}, EXIT_INPUT
        print(f"isec {args.command}: {exc}", file=sys.stderr)
    text = _render(_finalize(args, report), args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
