"""Command-line entry point: ``steercert {build,bound,certify,scan}``."""

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .bounds import DEFAULT_CAP, DEFAULT_RESTARTS, bound_report, lhs_exact_enumeration, quantum_value
from .certifier import ALG_TOL, CERT_TOL, extract_and_compare, scrambled_instance
from .correlations import depolarize
from .exceptions import SteerCertError
from .operators import parse_scenario

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load_scenario(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    try:
        spec = parse_scenario(obj)
    except (SteerCertError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: invalid scenario: {exc}") from None
    digest = hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()
    return spec, digest


def _meta(args, digest):
    return {"version": __version__, "seed": args.seed, "scenario_sha256": digest,
            "tolerances": {"algebraic": args.tol, "certification": args.cert_tol},
            "restarts": args.restarts, "enum_cap": args.enum_cap}


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".steercert-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_build(args):
    spec, digest = _load_scenario(args.scenario)
    F = spec.functional()
    psi = spec.reference_state()
    s = spec.scenario
    nz = np.flatnonzero(np.abs(psi) > 1e-12)
    out = {
        "meta": _meta(args, digest),
        "family": spec.family,
        "N": s.N, "d": s.d, "dims": s.dims,
        "functional": {"term_count": F.term_count, "symbolic_terms": len(F.terms),
                       "include_hc": F.include_hc, "beta_q": F.quantum_bound,
                       "matrix_dim": F.matrix.shape[0],
                       "hermitian_residual": float(np.abs(F.matrix - F.matrix.conj().T).max())},
        "reference_state": {"dim": int(psi.size), "support_size": int(nz.size),
                            "norm": float(np.linalg.norm(psi))},
    }
    if psi.size == s.dim:
        out["reference_state"]["value"] = quantum_value(F, psi)
    return out


def cmd_bound(args):
    spec, digest = _load_scenario(args.scenario)
    rep = bound_report(spec.family, spec.params, restarts=args.restarts, seed=args.seed,
                       cap=args.enum_cap, scenario=spec.scenario)
    out = {"meta": _meta(args, digest), **rep.to_dict()}
    if rep.lhs_upper is None:
        out["lhs_upper_note"] = "analytical bound unavailable"
    return out


def _certify_state(spec, args, rng):
    s = spec.scenario
    if args.state == "ideal":
        return spec.reference_state(), s, None
    if args.state == "scrambled":
        psi, s2 = scrambled_instance(spec.family, spec.params, rng, max_junk=args.max_junk)
        return psi, s2, None
    if args.state == "depolarized":
        return depolarize(spec.reference_state(), args.visibility), s, None
    try:
        psi = np.load(args.state)
    except (OSError, ValueError) as exc:
        raise InputError(f"{args.state}: cannot load state ({exc})") from None
    return psi, s, args.env_dim


def cmd_certify(args):
    spec, digest = _load_scenario(args.scenario)
    rng = np.random.default_rng(args.seed)
    psi, s, env = _certify_state(spec, args, rng)
    rep = extract_and_compare(psi, s, spec.family, spec.params, tol=args.tol,
                              cert_tol=args.cert_tol, env_dim=env)
    out = {"meta": _meta(args, digest), "state_source": args.state,
           **rep.to_dict(include_matrices=args.include_matrices)}
    if args.state == "depolarized":
        out["visibility"] = args.visibility
    return out


def cmd_scan(args):
    spec, digest = _load_scenario(args.scenario)
    if args.steps < 1 or not (0 <= args.v_min <= args.v_max <= 1):
        raise InputError("noise grid needs 0 <= v_min <= v_max <= 1 and steps >= 1")
    F = spec.functional()
    lhs = lhs_exact_enumeration(F, cap=args.enum_cap)
    ref = spec.reference_state()
    buf = io.StringIO()
    for k, v in sorted(_meta(args, digest).items()):
        buf.write(f"# {k}={json.dumps(v, sort_keys=True)}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["v", "value", "lhs_exact", "beta_q", "certified"])
    for v in np.linspace(args.v_min, args.v_max, args.steps):
        rho = depolarize(ref, float(v))
        val = quantum_value(F, rho)
        rep = extract_and_compare(rho, spec.scenario, spec.family, spec.params,
                                  tol=args.tol, cert_tol=args.cert_tol)
        wr.writerow([repr(float(v)), repr(val), repr(lhs), repr(F.quantum_bound), int(rep.certified)])
    return buf.getvalue()


COMMANDS = {"build": cmd_build, "bound": cmd_bound, "certify": cmd_certify, "scan": cmd_scan}


def build_parser():
    p = argparse.ArgumentParser(prog="steercert", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario JSON file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--tol", type=float, default=ALG_TOL, help="algebraic residual tolerance")
    common.add_argument("--cert-tol", type=float, default=CERT_TOL, help="certification tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    common.add_argument("--enum-cap", type=int, default=DEFAULT_CAP)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="functional metadata and reference state summary")
    sub.add_parser("bound", parents=[common], help="quantum and LHS bounds")
    c = sub.add_parser("certify", parents=[common], help="run the self-testing pipeline")
    c.add_argument("--state", default="ideal",
                   help="ideal | scrambled | depolarized | path to a .npy state vector or density matrix")
    c.add_argument("--visibility", type=float, default=0.9)
    c.add_argument("--max-junk", type=int, default=3)
    c.add_argument("--env-dim", type=int, default=None)
    c.add_argument("--include-matrices", action="store_true")
    s = sub.add_parser("scan", parents=[common], help="depolarizing-noise scan as CSV")
    s.add_argument("--v-min", type=float, default=0.0)
    s.add_argument("--v-max", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=11)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        result = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SteerCertError as exc:
        report = {"error": str(exc), "type": type(exc).__name__, "command": args.command}
        _write(_dump(report), args.out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    _write(result if isinstance(result, str) else _dump(result), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
