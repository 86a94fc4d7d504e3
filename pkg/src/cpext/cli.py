"""Command-line front end.

``cpext run FILE`` reads a problem document, runs the requested operation
and prints a JSON report. The exit code carries the verdict:

0 affirmative, 1 negative (certificate in the report), 2 marginal or
undecided, 3 input error, 4 numerical failure.

``cpext fixtures list`` and ``cpext fixtures emit NAME`` print the shipped
reference problems.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys

import jsonschema
import numpy as np

from . import aucrit, classical, cpcheck, extend
from . import linalg as la
from .errors import CpextError, NumericFailure
from .fixtures import fixture, fixture_names
from .serialize import DecodeError, decode_matrix, encode_matrix, load_schema, to_jsonable
from .solver import DEFAULT_TOLERANCES, Tolerances

REPORT_SCHEMA = "cpext-report/1"

EXIT_YES, EXIT_NO, EXIT_MARGINAL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3, 4


class InputError(ValueError):
    def __init__(self, message: str, path: str = "$"):
        super().__init__(message)
        self.path = path


# ---------------------------------------------------------------------------
# decoding


def _pairs(doc, key="pairs"):
    out = []
    for i, item in enumerate(doc.get(key, [])):
        out.append((decode_matrix(item["input"], f"$.{key}[{i}].input"), decode_matrix(item["output"], f"$.{key}[{i}].output")))
    return out


def _need_pairs(doc, n=None):
    pairs = _pairs(doc)
    if not pairs:
        raise InputError("at least one pair is required", "$.pairs")
    if n is not None and len(pairs) != n:
        raise InputError(f"this mode needs exactly {n} pairs", "$.pairs")
    return pairs


def _instance(doc) -> aucrit.AuInstance:
    (r1, q1), (r2, q2) = _need_pairs(doc, 2)
    return aucrit.AuInstance(r1, r2, q1, q2)


def _spec(doc) -> cpcheck.MapSpec:
    return cpcheck.preprocess(_need_pairs(doc), _pairs(doc, "dual_pairs"))


# ---------------------------------------------------------------------------
# certificates


def witness_certificate(spec: cpcheck.MapSpec, w: cpcheck.Witness) -> dict:
    cert = {
        "kind": "witness",
        "inputs": list(spec.inputs),
        "outputs": list(spec.outputs),
        "dual_inputs": list(spec.dual_inputs),
        "dual_outputs": list(spec.dual_outputs),
        "H": list(w.H),
        "G": list(w.G),
        "H0": w.H0,
        "bounded": bool(w.bounded),
        "weight": w.weight,
        "objective": cpcheck.witness_objective(spec, w),
        "min_eig": la.min_eig(cpcheck.witness_matrix(spec, w)),
    }
    return to_jsonable(cert)


def choi_certificate(c: la.ChoiMatrix) -> dict:
    return {"kind": "choi", "din": c.din, "dout": c.dout, "matrix": encode_matrix(c.matrix), "min_eig": c.min_eig()}


def au_certificate(inst: aucrit.AuInstance, pkg: aucrit.AuWitnessPackage, objective: float, min_eig: float) -> dict:
    return to_jsonable(
        {
            "kind": "au-witness",
            "rho1": inst.rho1,
            "rho2": inst.rho2,
            "rho1p": inst.rho1p,
            "rho2p": inst.rho2p,
            "H0": pkg.H0,
            "H1": pkg.H1,
            "H2": pkg.H2,
            "objective": objective,
            "min_eig": min_eig,
        }
    )


def recheck_certificate(cert: dict, psd_tol: float = 1e-9, margin_tol: float = 1e-7) -> bool:
    """Re-verify an embedded certificate from its JSON form alone.

    Witnesses are checked by rebuilding the block matrix and its pairing with
    the outputs; Choi matrices by their smallest eigenvalue.
    """
    kind = cert["kind"]
    if kind == "choi":
        m = decode_matrix(cert["matrix"])
        return bool(np.linalg.eigvalsh((m + m.conj().T) / 2)[0] >= -psd_tol * max(1.0, np.abs(m).max()))
    if kind == "witness":
        xs = [decode_matrix(x) for x in cert["inputs"]]
        ys = [decode_matrix(y) for y in cert["outputs"]]
        xps = [decode_matrix(x) for x in cert["dual_inputs"]]
        yps = [decode_matrix(y) for y in cert["dual_outputs"]]
        hs = [decode_matrix(h) for h in cert["H"]]
        gs = [decode_matrix(g) for g in cert["G"]]
        din, dout = xs[0].shape[0], ys[0].shape[0]
        m = np.zeros((din * dout, din * dout), dtype=complex)
        val = 0.0
        if cert["H0"] is not None:
            h0 = decode_matrix(cert["H0"])
            m += np.kron(h0, np.eye(dout))
            val += np.trace(h0).real
        for x, y, h in zip(xs, ys, hs):
            m += np.kron(x, h)
            val += np.trace(y.T @ h).real
        for xp, yp, g in zip(xps, yps, gs):
            m += np.kron(g, xp.T)
            val += np.trace(g @ yp).real
        ok = np.linalg.eigvalsh((m + m.conj().T) / 2)[0] >= -psd_tol and val <= -margin_tol
        if cert["bounded"]:
            ok = ok and all(np.linalg.norm(h, 2) <= 1 + psd_tol for h in hs)
        if cert["weight"] is not None and cert["H0"] is not None:
            ok = ok and np.abs(np.linalg.eigvalsh(decode_matrix(cert["H0"]))).sum() <= cert["weight"] + psd_tol
        return bool(ok)
    if kind == "au-witness":
        r1, r2, q1, q2 = (decode_matrix(cert[k]) for k in ("rho1", "rho2", "rho1p", "rho2p"))
        h0, h1, h2 = (decode_matrix(cert[k]) for k in ("H0", "H1", "H2"))
        m = np.kron(h0, np.eye(q1.shape[0])) + np.kron(r1, h1) + np.kron(r2, h2)
        val = np.trace(h0).real + np.trace(q1 @ h1.T).real + np.trace(q2 @ h2.T).real
        return bool(np.linalg.eigvalsh((m + m.conj().T) / 2)[0] >= -psd_tol and val <= -margin_tol)
    if kind == "search-hits":
        return all(recheck_certificate(h, psd_tol, margin_tol) for h in cert["hits"])
    if kind == "vertex":
        im = decode_matrix(cert["image"])
        return bool(np.linalg.eigvalsh((im + im.conj().T) / 2)[0] < -psd_tol)
    if kind == "violating-point":
        return cert["f"] < 0
    raise ValueError(f"unknown certificate kind {kind!r}")


# ---------------------------------------------------------------------------
# modes; each returns (verdict, exit code, values, certificate, diagnostics)


def _mode_cp_check(doc, tol, args):
    spec = _spec(doc)
    v = cpcheck.gamma_sdp(spec, tol)
    values = {"gamma": v.gamma, "lower_bound": v.lower_bound}
    if v.status == cpcheck.CP:
        return v.status, EXIT_YES, values, None, v.diagnostics
    if v.status == cpcheck.NOT_CP and v.witness is not None:
        return v.status, EXIT_NO, values, witness_certificate(spec, v.witness), v.diagnostics
    return v.status, EXIT_MARGINAL, values, None, v.diagnostics


def _mode_cp_extend(doc, tol, args):
    spec = _spec(doc)
    r = cpcheck.exact_cp_extension(spec, tol)
    if r.status == cpcheck.EXISTS:
        return r.status, EXIT_YES, {}, choi_certificate(r.choi), r.diagnostics
    if r.status == cpcheck.NOT_EXISTS:
        return r.status, EXIT_NO, {}, witness_certificate(spec, r.certificate), r.diagnostics
    return r.status, EXIT_MARGINAL, {}, None, r.diagnostics


_NORMS = {"sum_trace": cpcheck.DeltaNorm.SUM_TRACE, "max_trace": cpcheck.DeltaNorm.MAX_TRACE}


def _mode_approx(doc, tol, args):
    spec = _spec(doc)
    r = cpcheck.delta_sdp(spec, tol, _NORMS[doc.get("norm", "sum_trace")])
    values = {"delta": r.delta, "lower_bound": r.lower_bound, "upper_bound": r.upper_bound, "attained": r.attained}
    if r.delta <= tol.margin_tol:
        return "Approximable", EXIT_YES, values, None, r.diagnostics
    if r.witness is not None:
        return "NotApproximable", EXIT_NO, values, witness_certificate(spec, r.witness), r.diagnostics
    return "NotApproximable", EXIT_MARGINAL, values, None, r.diagnostics


def _mode_channel(doc, tol, args):
    spec = _spec(doc)
    w = args.w if args.w is not None else doc.get("w", 1.0)
    r = extend.channel_extension(spec, tol)
    score = extend.cptp_delta(spec, w, tol)
    values = {"delta_tp": score.delta_tp, "gamma_tp": score.gamma_tp, "w": w, "trace_defect": score.lam}
    diag = {"extension": r.diagnostics, "score": score.diagnostics}
    if r.status == cpcheck.EXISTS:
        return r.status, EXIT_YES, values, choi_certificate(r.choi), diag
    if r.status == cpcheck.NOT_EXISTS:
        return r.status, EXIT_NO, values, witness_certificate(spec, r.certificate), diag
    return r.status, EXIT_MARGINAL, values, None, diag


def _mode_probabilistic(doc, tol, args):
    pairs = _need_pairs(doc)
    equal = bool(doc.get("equal", False))
    if doc.get("objective", "maximin") == "weighted":
        priors = doc.get("priors")
        if priors is None or len(priors) != len(pairs):
            raise InputError("weighted objective needs one prior per pair", "$.priors")
        r = extend.probabilistic_weighted(pairs, priors, doc.get("floor"), equal, tol)
    else:
        r = extend.probabilistic_maximin(pairs, equal, tol)
    values = {"value": r.value, "probabilities": r.probs, "objective": r.objective_kind}
    if r.status == extend.INFEASIBLE:
        return "Infeasible", EXIT_NO, values, None, r.diagnostics
    if r.status != extend.OPTIMAL:
        return extend.MARGINAL, EXIT_MARGINAL, values, None, r.diagnostics
    cert = choi_certificate(r.choi)
    if min(r.probs) > tol.margin_tol:
        return cpcheck.EXISTS, EXIT_YES, values, cert, r.diagnostics
    return cpcheck.NOT_EXISTS, EXIT_NO, values, None, r.diagnostics


def _mode_hilbert(doc, tol, args):
    (r1, q1), (r2, q2) = _need_pairs(doc, 2)
    h = extend.hilbert_metric_check(r1, r2, q1, q2)
    values = {"lhs": h.lhs, "rhs": h.rhs, "marginal_support": h.marginal_support}
    code = EXIT_YES if h.status == cpcheck.EXISTS else EXIT_NO
    if h.marginal_support and code == EXIT_NO:
        code = EXIT_MARGINAL
    return h.status, code, values, None, h.diagnostics


def _mode_au(doc, tol, args):
    inst = _instance(doc)
    r = aucrit.au_condition(inst)
    values = {"min_value": r.min_value, "p": r.p, "t": r.t}
    if r.status == aucrit.HOLDS:
        return r.status, EXIT_YES, values, None, r.diagnostics
    if r.status == aucrit.FAILS:
        return r.status, EXIT_NO, values, {"kind": "violating-point", "p": r.p, "t": r.t, "f": r.min_value}, r.diagnostics
    return r.status, EXIT_MARGINAL, values, None, r.diagnostics


def _mode_fidelity(doc, tol, args):
    inst = _instance(doc)
    r = aucrit.fidelity_criterion(inst, tol)
    values = {"a": r.a, "b": r.b, "failed": r.failed, "slacks": r.slacks}
    if r.status == cpcheck.EXISTS:
        return r.status, EXIT_YES, values, choi_certificate(aucrit.construct_qubit_channel(inst, tol)), {}
    return r.status, EXIT_NO, values, None, {}


def _mode_classical(doc, tol, args):
    pairs = _need_pairs(doc)
    kind = doc.get("kind", "domain")
    if kind == "positive":
        r = classical.commuting_domain_positive(pairs, tol)
        values = {"n_vertices": len(r.polytope.extremes), "vertex_min_eigs": r.min_eigs}
        if r.status == classical.POSITIVE:
            return r.status, EXIT_YES, values, None, {}
        cert = to_jsonable({"kind": "vertex", "vertex": r.vertex, "image": r.image})
        return r.status, EXIT_NO, values, cert, {}
    if kind == "range":
        r = classical.commuting_range_cp_extension(pairs, tol)
    else:
        r = classical.commuting_domain_extension(pairs, bool(doc.get("trace_preserving", False)), tol)
    values = {"method": r.method}
    if r.status == cpcheck.EXISTS:
        return r.status, EXIT_YES, values, choi_certificate(r.choi), r.diagnostics
    if r.status in (cpcheck.NOT_EXISTS, cpcheck.NOT_CP) and r.certificate is not None:
        spec = cpcheck.preprocess(pairs)
        return r.status, EXIT_NO, values, witness_certificate(spec, r.certificate), r.diagnostics
    return r.status, EXIT_MARGINAL, values, None, r.diagnostics


def _mode_witness_verify(doc, tol, args):
    inst = _instance(doc)
    if "witness" not in doc:
        raise InputError("witness-verify needs a witness block", "$.witness")
    wd = doc["witness"]
    pkg = aucrit.AuWitnessPackage(
        decode_matrix(wd["H0"], "$.witness.H0"),
        decode_matrix(wd["H1"], "$.witness.H1"),
        decode_matrix(wd["H2"], "$.witness.H2"),
        float(wd["objective_bound"]),
        tuple(wd["eps_range"]) if "eps_range" in wd else None,
    )
    r = aucrit.verify_au_witness(inst, pkg, tol)
    values = {"objective": r.objective, "min_eig": r.min_eig, "reason": r.reason, "eps_checks": r.eps_checks}
    if r.status == aucrit.VALID:
        return r.status, EXIT_YES, values, au_certificate(inst, pkg, r.objective, r.min_eig), {}
    return r.status, EXIT_NO, values, None, {}


def _mode_search(doc, tol, args):
    block = doc.get("search", {})
    d = int(block.get("d", 3))
    trials = int(args.trials if args.trials is not None else block.get("trials", 100))
    seed = int(args.seed if args.seed is not None else block.get("seed", 0))
    w = args.w if args.w is not None else doc.get("w", 1.0)
    rep = aucrit.transpose_counterexample_search(d, trials, seed, w, tol)
    values = {
        "d": d,
        "trials": trials,
        "seed": seed,
        "hit_fraction": rep.hit_fraction,
        "hit_trials": [h.trial for h in rep.hits],
        "delta_tp": rep.deltas,
        "trace_norm_condition_failures": rep.au_failures,
    }
    if not rep.hits:
        return "NoneFound", EXIT_NO, values, None, {}
    hits = []
    for h in rep.hits:
        c = au_certificate(h.instance, h.package, h.check.objective, h.check.min_eig)
        c["trial"], c["delta_tp"] = h.trial, h.delta_tp
        hits.append(c)
    return "Found", EXIT_YES, values, {"kind": "search-hits", "hits": hits}, {}


MODES = {
    "cp-check": _mode_cp_check,
    "cp-extend": _mode_cp_extend,
    "approx": _mode_approx,
    "channel": _mode_channel,
    "probabilistic": _mode_probabilistic,
    "hilbert": _mode_hilbert,
    "au": _mode_au,
    "fidelity": _mode_fidelity,
    "classical": _mode_classical,
    "witness-verify": _mode_witness_verify,
    "counterexample-search": _mode_search,
}


# ---------------------------------------------------------------------------
# driver


def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--tol expects key=value, got {item!r}", "--tol")
        k, v = item.split("=", 1)
        if k not in DEFAULT_TOLERANCES.as_dict():
            raise InputError(f"unknown tolerance {k!r}", "--tol")
        try:
            out[k] = int(v) if k == "max_iters" else float(v)
        except ValueError as exc:
            raise InputError(f"bad value for {k}: {v!r}", "--tol") from exc
    return out


def _tolerances(doc, args) -> Tolerances:
    kw = dict(doc.get("tolerances", {}))
    kw.update(_parse_tol(args.tol))
    return DEFAULT_TOLERANCES.with_overrides(**kw)


def run_document(doc, args) -> tuple[dict, int]:
    """Validate and run a problem document; returns (report, exit code)."""
    report = {
        "schema": REPORT_SCHEMA,
        "mode": doc.get("mode", "") if isinstance(doc, dict) else "",
        "verdict": "InputError",
        "exit_code": EXIT_INPUT,
        "tolerances": DEFAULT_TOLERANCES.as_dict(),
        "values": {},
        "certificate": None,
        "diagnostics": {},
    }
    try:
        try:
            jsonschema.validate(doc, load_schema("problem.schema.json"))
        except jsonschema.ValidationError as exc:
            raise InputError(exc.message, exc.json_path) from exc
        if "description" in doc:
            report["description"] = doc["description"]
        tol = _tolerances(doc, args)
        report["tolerances"] = tol.as_dict()
        verdict, code, values, cert, diag = MODES[doc["mode"]](doc, tol, args)
        report.update(verdict=verdict, exit_code=code, values=values, certificate=cert, diagnostics=diag)
    except (InputError, DecodeError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc), "path": exc.path}
    except NumericFailure as exc:
        report.update(verdict="NumericFailure", exit_code=EXIT_NUMERIC)
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except (CpextError, ValueError, KeyError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    report = to_jsonable(report)
    return report, report["exit_code"]


def _summary(report: dict) -> str:
    lines = [f"mode:    {report['mode']}", f"verdict: {report['verdict']} (exit {report['exit_code']})"]
    for k, v in report["values"].items():
        if isinstance(v, (int, float, str, bool)) or v is None:
            lines.append(f"  {k} = {v}")
    cert = report.get("certificate")
    if cert:
        lines.append(f"certificate: {cert['kind']}")
    if "error" in report:
        lines.append(f"error: {report['error']['message']}")
    return "\n".join(lines)


def _emit(report: dict, fmt: str) -> None:
    if fmt == "summary":
        print(_summary(report))
    else:
        print(json.dumps(report, sort_keys=True))


def _cmd_run(args) -> int:
    try:
        with open(args.file, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        report = to_jsonable(
            {
                "schema": REPORT_SCHEMA,
                "mode": "",
                "verdict": "InputError",
                "exit_code": EXIT_INPUT,
                "tolerances": DEFAULT_TOLERANCES.as_dict(),
                "values": {},
                "certificate": None,
                "diagnostics": {},
                "error": {"type": type(exc).__name__, "message": str(exc), "path": "$"},
            }
        )
        code = EXIT_INPUT
    else:
        report, code = run_document(doc, args)
    report["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    _emit(report, args.format)
    return code


def _cmd_fixtures(args) -> int:
    if args.action == "list":
        for name in fixture_names():
            print(name)
        return 0
    if not args.name:
        print("fixtures emit needs a name", file=sys.stderr)
        return EXIT_INPUT
    try:
        doc = fixture(args.name)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(doc, sort_keys=True, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpext", description="Completely positive and channel extensions of partially specified maps.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a problem file and print a report")
    r.add_argument("file")
    r.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override; repeatable")
    r.add_argument("--w", type=float, default=None, help="weight of the trace defect")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--trials", type=int, default=None)
    r.add_argument("--format", choices=["json", "summary"], default="json")
    f = sub.add_parser("fixtures", help="list or emit reference problems")
    f.add_argument("action", choices=["list", "emit"])
    f.add_argument("name", nargs="?")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_fixtures(args)


if __name__ == "__main__":
    sys.exit(main())
