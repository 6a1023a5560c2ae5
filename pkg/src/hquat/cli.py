"""Command-line front end; every command prints one JSON report on stdout.

Exit codes: 0 success, 1 a check failed, 2 usage or input error,
3 numerical failure (no convergence, unsupported shape, branch degeneracy).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import quat as Q
from .cauchy import (
    argument_principle_check,
    cauchy_derivative,
    find_root,
    laurent_components,
    quaternion_index,
    residue_closed_form,
    residue_numeric,
    topological_index,
)
from .crcheck import check_conformal, check_cr, check_harmonic
from .elementary import exp, ln_principal, polar
from .errors import BranchDegeneracy, ConvergenceError, DomainError, QuatError, UnsupportedShape
from .paths import Circle, integral_dln, line_integral, path_from_json, stieltjes_integral
from .words import (
    ConjugatePhrase,
    canonicalize,
    eliminate_conjugate,
    eval_phrase,
    phrase_from_json,
    phrase_to_json,
)


class UsageError(Exception):
    pass


def _load(text: str):
    """Inline JSON, a path to a JSON file, or (fallback) the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if os.path.exists(text):
        with open(text) as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"malformed JSON in {text}: {exc}") from exc
    return text


def _quat(text):
    if text is None:
        raise UsageError("missing quaternion argument")
    try:
        return Q.from_json(_load(text) if isinstance(text, str) else text)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def _phrase(text):
    obj = _load(text) if isinstance(text, str) else text
    if not isinstance(obj, dict):
        raise UsageError("a phrase must be a JSON object with 'center' and 'words'")
    try:
        return phrase_from_json(obj)
    except (DomainError, KeyError, TypeError, ValueError, IndexError) as exc:
        raise UsageError(f"bad phrase: {exc}") from exc


def _path(text):
    obj = _load(text) if isinstance(text, str) else text
    try:
        return path_from_json(obj)
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad path: {exc}") from exc


def _z_only(p):
    return eliminate_conjugate(p) if isinstance(p, ConjugatePhrase) else p


def _quad(res) -> dict:
    return {
        "value": Q.to_json(res.value),
        "error_estimate": res.error_estimate,
        "refinements": res.refinements,
        "trace": [{k: v for k, v in t.items() if k in ("level", "delta", "points")} for t in res.trace],
    }


# ---------------------------------------------------------------------------
# commands


def cmd_eval(a):
    p = _phrase(a.phrase)
    return {"value": Q.to_json(eval_phrase(p, _quat(a.at)))}


def cmd_simplify(a):
    p = canonicalize(_z_only(_phrase(a.phrase)))
    return {"value": phrase_to_json(p)}


def cmd_exp(a):
    return {"value": Q.to_json(exp(_quat(a.value)))}


def cmd_ln(a):
    return {"value": Q.to_json(ln_principal(_quat(a.value)))}


def cmd_polar(a):
    rho, argv = polar(_quat(a.value))
    return {"value": {"rho": rho, "arg": {"w": argv.w, "x": argv.x, "y": argv.y}}}


def cmd_integrate(a):
    p = _z_only(_phrase(a.phrase))
    path = _path(a.path)
    if a.stieltjes:
        res = stieltjes_integral(p, _z_only(_phrase(a.stieltjes)), path, a.tol, a.max_refine)
    else:
        res = line_integral(p, path, a.tol, a.max_refine)
    return _quad(res)


def cmd_dln(a):
    return _quad(integral_dln(_path(a.path), _quat(a.at), a.tol, a.max_refine))


def _circle(text) -> Circle:
    path = _path(text)
    if not isinstance(path, Circle):
        raise UsageError("a circle path is required")
    return path


def cmd_cauchy(a):
    p = _z_only(_phrase(a.phrase))
    val = cauchy_derivative(p, _circle(a.circle), _quat(a.at), a.k, a.tol, a.max_refine)
    return {"value": Q.to_json(val), "k": a.k}


def cmd_laurent(a):
    p = _z_only(_phrase(a.phrase))
    res = laurent_components(p, _quat(a.center), a.r1, a.R1, _quat(a.at), a.kmax, a.tol, a.max_refine)
    return {
        "value": Q.to_json(res.total()),
        "phi": [Q.to_json(q) for q in res.phi],
        "psi": [Q.to_json(q) for q in res.psi],
    }


def cmd_residue(a):
    p = _z_only(_phrase(a.phrase))
    pole = _quat(a.pole) if a.pole else p.center
    out = {"value": Q.to_json(residue_numeric(p, pole, _quat(a.M), a.r, a.tol, a.max_refine))}
    if p.left_form and Q.isclose(p.center, pole, 0.0):
        out["closed_form"] = Q.to_json(residue_closed_form(p, pole))
    return out


def cmd_index(a):
    path = _path(a.path)
    at = _quat(a.at)
    top = topological_index(path, at)
    return {
        "value": Q.to_json(quaternion_index(path, at, a.tol, a.max_refine)),
        "topological": list(top.as_tuple()),
    }


def cmd_argp(a):
    p = _z_only(_phrase(a.phrase))
    zeros_obj = _load(a.zeros)
    if not isinstance(zeros_obj, list):
        raise UsageError("--zeros must be a JSON list")
    zeros = []
    for z in zeros_obj:
        if isinstance(z, dict) and "at" in z:
            zeros.append((Q.from_json(z["at"]), int(z["divisor"])) if "divisor" in z else Q.from_json(z["at"]))
        else:
            zeros.append(Q.from_json(z))
    chk = argument_principle_check(p, _circle(a.path), zeros, a.tol, a.max_refine)
    passed = chk.delta <= a.check_tol
    return {
        "value": {"lhs": Q.to_json(chk.lhs), "rhs": Q.to_json(chk.rhs)},
        "delta": chk.delta,
        "passed": passed,
        **chk.details,
    }, (0 if passed else 1)


def cmd_root(a):
    p = _z_only(_phrase(a.phrase))
    res = find_root(p, a.box, a.tol)
    out = {
        "value": Q.to_json(res.root),
        "residual": res.residual,
        "passed": res.converged,
        "iterations": res.iterations,
        "search_radius": res.radius,
    }
    return out, (0 if res.converged else 3)


def cmd_crcheck(a):
    p = _phrase(a.phrase)
    z = _quat(a.at)
    tol = a.check_tol
    reports = {"cr": check_cr(p, z, a.step, tol).to_json()}
    if a.harmonic:
        reports["harmonic"] = check_harmonic(p, z, a.step, tol).to_json()
    if a.conformal:
        pairs_obj = _load(a.pairs) if a.pairs else [[1, "K"], ["J", "L"]]
        pairs = [(Q.from_json(h), Q.from_json(k)) for h, k in pairs_obj]
        reports["conformal"] = check_conformal(_z_only(p), z, pairs, tol).to_json()
    passed = all(r["passed"] for r in reports.values())
    return {"value": reports, "passed": passed}, (0 if passed else 1)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-8, help="quadrature tolerance (default 1e-8)")
    common.add_argument("--max-refine", type=int, default=20, help="maximum refinement levels (default 20)")
    common.add_argument("--seed", type=int, default=0, help="seed recorded in the report")
    common.add_argument("--json", dest="json_file", help="read arguments from a JSON object (file or '-')")
    common.add_argument("--timing", action="store_true", help="include wall time in the report")

    parser = argparse.ArgumentParser(prog="hquat", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=func)
        return sp

    sp = add("eval", cmd_eval, "evaluate a phrase")
    sp.add_argument("--phrase")
    sp.add_argument("--at")
    sp = add("simplify", cmd_simplify, "canonical form of a phrase")
    sp.add_argument("--phrase")
    for name, func in (("exp", cmd_exp), ("ln", cmd_ln), ("polar", cmd_polar)):
        sp = add(name, func, f"{name} of a quaternion")
        sp.add_argument("value", nargs="?")
    sp = add("integrate", cmd_integrate, "line integral of a phrase")
    sp.add_argument("--phrase")
    sp.add_argument("--path")
    sp.add_argument("--stieltjes", help="integrate against d q(z) for this phrase q")
    sp = add("dln", cmd_dln, "branch-tracked integral of dLn(z - a)")
    sp.add_argument("--path")
    sp.add_argument("--at")
    sp = add("cauchy", cmd_cauchy, "Cauchy integral formula (k-th derivative)")
    sp.add_argument("--phrase")
    sp.add_argument("--circle")
    sp.add_argument("--at")
    sp.add_argument("--k", type=int, default=0)
    sp = add("laurent", cmd_laurent, "Laurent components on an annulus")
    sp.add_argument("--phrase")
    sp.add_argument("--center")
    sp.add_argument("--r1", type=float)
    sp.add_argument("--R1", type=float)
    sp.add_argument("--at")
    sp.add_argument("--kmax", type=int, default=4)
    sp = add("residue", cmd_residue, "residue by quadrature over a small circle")
    sp.add_argument("--phrase")
    sp.add_argument("--pole")
    sp.add_argument("--M", default="J")
    sp.add_argument("--r", type=float, default=0.5)
    sp = add("index", cmd_index, "quaternion and topological index")
    sp.add_argument("--path")
    sp.add_argument("--at")
    sp = add("argp", cmd_argp, "argument principle check")
    sp.add_argument("--phrase")
    sp.add_argument("--path")
    sp.add_argument("--zeros")
    sp.add_argument("--check-tol", type=float, default=1e-6)
    sp = add("root", cmd_root, "root search for a monic phrase")
    sp.add_argument("--phrase")
    sp.add_argument("--box", type=float)
    sp = add("crcheck", cmd_crcheck, "Cauchy-Riemann / harmonic / conformal checks")
    sp.add_argument("--phrase")
    sp.add_argument("--at")
    sp.add_argument("--step", type=float, default=1e-4)
    sp.add_argument("--check-tol", type=float, default=1e-5)
    sp.add_argument("--harmonic", action="store_true")
    sp.add_argument("--conformal", action="store_true")
    sp.add_argument("--pairs")
    return parser


def _merge_json_args(args):
    if not args.json_file:
        return
    text = sys.stdin.read() if args.json_file == "-" else None
    try:
        obj = json.loads(text) if text is not None else _load(args.json_file)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise UsageError("--json must hold a JSON object")
    for key, val in obj.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise UsageError(f"unknown argument {key!r} for {args.command}")
        if getattr(args, dest) is None:
            setattr(args, dest, val)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    report = {"command": args.command, "tol": args.tol, "max_refine": args.max_refine, "seed": args.seed}
    code = 0
    try:
        _merge_json_args(args)
        out = args.func(args)
        if isinstance(out, tuple):
            out, code = out
        report.update(out)
    except UsageError as exc:
        print(f"hquat: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"hquat: {exc}", file=sys.stderr)
        report["error"] = str(exc)
        code = 2
    except (ConvergenceError, UnsupportedShape, BranchDegeneracy) as exc:
        print(f"hquat: {type(exc).__name__}: {exc}", file=sys.stderr)
        report["error"] = f"{type(exc).__name__}: {exc}"
        best = getattr(exc, "best", None)
        if best is not None:
            report["best"] = _quad(best)
        code = 3
    except QuatError as exc:
        print(f"hquat: {exc}", file=sys.stderr)
        report["error"] = str(exc)
        code = 3
    if args.timing:
        report["wall_time"] = time.perf_counter() - start
    json.dump(report, sys.stdout, sort_keys=True, allow_nan=True)
    sys.stdout.write("\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
