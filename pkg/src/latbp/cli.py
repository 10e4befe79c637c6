"""Command-line front end: ``latbp analyze | verify | gallery | counterexample``.

Exit status: 0 on success, 1 when an asserted bound fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import approximants as ap
from . import function_lattices as fl
from . import gallery
from . import operators as op
from .lattice import (DEFAULT_EXACT_CAP, L1, L2, LINF, LatticeError, NormSpec, Partition, matrix_from_json,
                      matrix_to_json, vector_norm)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return None if math.isnan(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_report(report: dict, out: str | None, timestamp: bool) -> str:
    report = dict(report)
    report.setdefault("schema", op.SCHEMA)
    if timestamp:
        report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


# -- analyze -------------------------------------------------------------------

def _bound(name: str, lhs: float, rhs: float, tol: float) -> dict:
    return {"name": name, "lhs": lhs, "rhs": rhs, "tol": tol, "ok": bool(lhs <= rhs + tol)}


def analyze(M: np.ndarray, spec: NormSpec, *, cap: int = DEFAULT_EXACT_CAP, seed: int = 0) -> dict:
    """Defect report, the diagonal approximants and every applicable bound check."""
    n = M.shape[0]
    rep = op.defect_report(M, spec, cap=cap, seed=seed)
    bp = rep.bp.value
    exact = spec.exact_operator_norm
    upper = lambda A: op.norm_upper(A, spec, seed=seed)  # noqa: E731
    lower = lambda A: op.norm_lower(A, spec, seed=seed)  # noqa: E731

    D = ap.diagonal_part(M)
    S = ap.ck_multiplier(M)
    checks = [
        _bound("bp <= op_norm", bp, upper(M), 1e-9),
        _bound("dp_lb <= 2 bp", rep.dp_lb, 2 * bp, 1e-9),
        _bound("||diag(M)|| <= ||M||", lower(D), upper(M), 1e-9),
        _bound("averaging identity residual", ap.offdiag_average_check(M, Partition.finest(n))
               if n <= ap.MAX_AVERAGE_BLOCKS else 0.0, 0.0, 1e-12),
    ]
    if rep.exact["bp"]:
        checks.append(_bound("||M - diag(M)|| <= 4 bp", upper(M - D), 4 * bp, 1e-8))
    if rep.ip is not None:
        checks.append(_bound("|ip - bp|", abs(rep.ip - bp), 0.0, 1e-9))
    if rep.commutator is not None:
        checks.append(_bound("bp <= commutator_max", bp, rep.commutator.value, 1e-9))
        checks.append(_bound("commutator_max <= 2 bp", rep.commutator.value, 2 * bp, 1e-9))
    approx = {"diagonal_part": matrix_to_json(D), "ck_multiplier": matrix_to_json(S)}
    if spec.is_sup and rep.exact["bp"]:
        checks.append(_bound("||M - ck(M)|| <= 2 bp", upper(M - S), 2 * bp, 1e-9))
    extra = {}
    if rep.dist is not None:
        approx["dist_minimizer"] = matrix_to_json(rep.dist.minimizer)
        if rep.exact["bp"]:
            dtol = 1e-8 if rep.dist.status == "exact" else 1e-6
            checks.append(_bound("bp <= dist_to_diag", bp, rep.dist.value, dtol))
            checks.append(_bound("dist_to_diag <= 4 bp", rep.dist.value, 4 * bp, dtol))
        # M is within dist of the diagonal D*, so it sits in the dist-center
        eps = rep.dist.value
        est = op.rho_center(M, spec, eps, seed=seed)
        extra["rho_center"] = est.to_json()
        if math.isfinite(est.rho_upper):
            x = np.ones(n)
            Dx = ap.local_bp_approximant(M, x, est.rho_upper, spec)
            resid = vector_norm(M @ x - Dx @ x, spec)
            approx["local_bp_approximant"] = {"x": x.tolist(), "lambda": est.rho_upper,
                                              "matrix": matrix_to_json(Dx), "residual": resid}
            checks.append(_bound("local residual <= eps", resid / vector_norm(x, spec), eps, 1e-6))
            checks.append(_bound("||D_x|| <= lambda", upper(Dx), est.rho_upper, 1e-12))
    if rep.exact["bp"] and bp > 0 and rep.dist is not None:
        # whether bp-small forces membership in a center is open; report only
        at_bp = op.rho_center(M, spec, bp, seed=seed)
        extra["rho_center_at_bp"] = dict(at_bp.to_json(), note="reported, no implication claimed")
    if exact and rep.exact["bp"]:
        try:
            inv = op.inverse_defect_check(M, spec, cap=cap)
        except LatticeError as exc:
            extra["inverse"] = {"skipped": str(exc)}
        else:
            extra["inverse"] = inv.to_json()
            checks.append(_bound("bp(M^-1) <= 2||M^-1||^2 bp", inv.bp_inverse, inv.bound, 1e-8))
    out = {"command": "analyze", "matrix": matrix_to_json(M), "report": rep.to_json(),
           "approximants": approx, "checks": checks, **extra}
    out["ok"] = all(c["ok"] for c in checks)
    return out


# -- argument handling -------------------------------------------------------------

def _norm_list(text: str) -> tuple:
    return tuple(NormSpec.parse(t) for t in text.split(","))


def _int_list(text: str) -> tuple:
    return tuple(int(t) for t in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latbp", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp so reports are byte-reproducible")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="full defect report for a matrix")
    a.add_argument("--matrix", required=True, help='JSON {"n": int, "rows": [[...], ...]}')
    a.add_argument("--norm", default="linf", help="l1 | l2 | linf | lp:<p> | wsup:<weights.json>")
    a.add_argument("--exact-max-n", type=int, default=DEFAULT_EXACT_CAP)
    a.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("verify", parents=[common], help="seeded property suites")
    v.add_argument("--suite", required=True, choices=["bounds", "approximants", "function"])
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--dims", type=_int_list, default=(5,), help="comma-separated dimensions")
    v.add_argument("--norms", type=_norm_list, default=(L1, L2, LINF), help="comma-separated norm specs")

    g = sub.add_parser("gallery", parents=[common], help="named examples")
    g.add_argument("name", choices=["antidiagonal", "walsh"])
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--i", type=int, default=4)
    g.add_argument("--permute-seed", type=int, default=12345)

    c = sub.add_parser("counterexample", parents=[common], help="≥ 1/2 certificates")
    c.add_argument("name", choices=["e-lattice", "renorm"])
    c.add_argument("--n", type=int, default=4)
    c.add_argument("--phi", required=True,
                   help='PL multiplier {"breakpoints", "values"} (e-lattice) or '
                        'sequence {"entries", "limit", "delta"} (renorm)')
    c.add_argument("--depth", type=int, default=12)
    c.add_argument("--eps", type=float, default=0.1)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        report, ok = _dispatch(args)
    except (InputError, LatticeError) as exc:
        print(f"latbp: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"latbp: assertion failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    dump_report(report, args.out, not args.no_timestamp)
    return EXIT_OK if ok else EXIT_FAIL


def _dispatch(args) -> tuple:
    if args.command == "analyze":
        M = matrix_from_json(_load_json(args.matrix))
        spec = NormSpec.parse(args.norm)
        if M.shape[0] > args.exact_max_n and spec.exact_operator_norm:
            raise InputError(f"n = {M.shape[0]} exceeds --exact-max-n {args.exact_max_n}")
        rep = analyze(M, spec, cap=args.exact_max_n, seed=args.seed)
        return rep, rep["ok"]
    if args.command == "verify":
        if args.suite == "function":
            rep = gallery.function_suite(seed=args.seed, trials=args.trials)
        else:
            groups = ("bounds", "dp", "dist", "inverse") if args.suite == "bounds" else ("approximants",)
            rep = gallery.random_suite(seed=args.seed, trials=args.trials, dims=args.dims,
                                       specs=args.norms, groups=groups)
        out = rep.to_json()
        out["command"] = f"verify {args.suite}"
        return out, rep.failures == 0
    if args.command == "gallery":
        if args.name == "antidiagonal":
            rep = gallery.antidiagonal_example(args.eps)
        else:
            rep = gallery.walsh_modulus_example(args.i, permute_seed=args.permute_seed)
        rep["command"] = f"gallery {args.name}"
        return rep, True
    if args.command == "counterexample":
        data = _load_json(args.phi)
        if args.name == "e-lattice":
            cfg = fl.ELatticeConfig(args.depth)
            phi = fl.PLFunction.from_json(data)
            cert = fl.e_certificate(args.n, phi, cfg)
            rechecked = [fl.recheck_witness(w, args.n, phi, cfg) for w in cert.witnesses]
            rep = {"command": "counterexample e-lattice", "phi": phi.to_json(),
                   "certificate": cert.to_json(), "value": cert.value, "rechecked": rechecked}
            return rep, cert.value >= 0.5 - 1e-12
        psi = fl.SeqWithLimit.from_json(data)
        cert = fl.renorm_certificate(args.eps, psi)
        rep = {"command": "counterexample renorm", "psi": psi.to_json(),
               "certificate": cert.to_json(), "value": cert.value}
        return rep, cert.value >= cert.guarantee - 1e-12
    raise InputError(f"unknown command {args.command}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
