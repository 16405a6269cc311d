"""Command-line front end for the positivity and separability checks.

Problem files are JSON with 1-based indices; reports are emitted as JSON
or plain text with numbers at 12 significant digits.
"""

import argparse
import json
import sys

import numpy as np

from . import positivity, separability
from .forms import BiQuadraticForm, KroneckerMatrix, kron_rank1
from .sdp import dump_problem

EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_ERROR = 70


class InputError(Exception):
    pass


def _sig(x):
    """Round-trippable float at 12 significant digits."""
    return float("%.12g" % float(x))


def _vec(v):
    return [_sig(x) for x in np.asarray(v).ravel()]


def _require(doc, key, kind, where):
    if key not in doc:
        raise InputError("missing %r in %s" % (key, where))
    val = doc[key]
    if kind is int and (not isinstance(val, int) or isinstance(val, bool)):
        raise InputError("%r in %s must be an integer" % (key, where))
    if kind in (list, dict) and not isinstance(val, kind):
        raise InputError("%r in %s must be a %s" % (key, where, kind.__name__))
    return val


def _dimensions(doc):
    p = _require(doc, "p", int, "input")
    q = _require(doc, "q", int, "input")
    if p < 1 or q < 1:
        raise InputError("dimensions must be positive")
    return p, q


def _matrix(data, shape, where):
    try:
        mat = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise InputError("%s must be a numeric array" % where)
    if mat.shape != shape:
        raise InputError("%s must have shape %s" % (where, (shape,)))
    return mat


def parse_positivity_input(doc):
    """Build the bi-quadratic form described by a positivity document."""
    p, q = _dimensions(doc)
    form = _require(doc, "form", dict, "input")
    kind = _require(form, "kind", str, "form")
    if kind == "gram":
        mat = _matrix(_require(form, "matrix", list, "form"),
                      (p * q, p * q), "form matrix")
        return BiQuadraticForm.from_gram(p, q, mat)
    if kind == "tensor":
        vals = _matrix(_require(form, "values", list, "form"),
                       (p, q, p, q), "form values")
        return BiQuadraticForm.from_full_tensor(p, q, vals)
    if kind == "omega":
        entries = _require(form, "entries", list, "form")
        flat = []
        for pos, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise InputError("entry %d must be an object" % pos)
            try:
                i, j = int(entry["i"]), int(entry["j"])
                k, l = int(entry["k"]), int(entry["l"])
                value = float(entry["value"])
            except (KeyError, TypeError, ValueError):
                raise InputError("entry %d needs integer i,j,k,l and a "
                                 "numeric value" % pos)
            if not (1 <= i <= k <= p and 1 <= j <= l <= q):
                raise InputError("entry %d is outside the canonical index "
                                 "set" % pos)
            flat.append((i, j, k, l, value))
        return BiQuadraticForm.from_omega_entries(p, q, flat)
    raise InputError("unknown form kind %r" % kind)


def parse_separability_input(doc):
    """Build the Kronecker-subspace matrix described by a document."""
    p, q = _dimensions(doc)
    has_matrix = "matrix" in doc
    has_atoms = "atoms" in doc
    if has_matrix == has_atoms:
        raise InputError("provide exactly one of 'matrix' or 'atoms'")
    if has_matrix:
        mat = _matrix(doc["matrix"], (p * q, p * q), "matrix")
        try:
            return KroneckerMatrix(p, q, mat)
        except ValueError as exc:
            raise InputError(str(exc))
    total = np.zeros((p * q, p * q))
    atoms = _require(doc, "atoms", list, "input")
    if not atoms:
        raise InputError("atom list is empty")
    for pos, atom in enumerate(atoms):
        if not isinstance(atom, dict):
            raise InputError("atom %d must be an object" % pos)
        u = _matrix(atom.get("u"), (p,), "atom %d u" % pos)
        v = _matrix(atom.get("v"), (q,), "atom %d v" % pos)
        weight = float(atom.get("weight", 1.0))
        if weight <= 0:
            raise InputError("atom %d weight must be positive" % pos)
        total += weight * kron_rank1(u, v).mat
    return KroneckerMatrix(p, q, total)


def positivity_report_dict(report):
    return {
        "status": report.status,
        "b_min": None if report.b_min is None else _sig(report.b_min),
        "boundary": bool(report.boundary),
        "bound_sequence": [[k, _sig(b)] for k, b in report.bound_sequence],
        "minimizers": [{"u": _vec(u), "v": _vec(v), "value": _sig(val)}
                       for u, v, val in report.minimizers],
        "order_used": report.order_used,
        "flat_t": report.flat_t,
        "moment_rank": report.moment_rank,
        "timings": {key: _sig(val) for key, val in report.timings.items()},
        "diagnostics": [[d[0], str(d[1]), str(d[2])]
                        for d in report.diagnostics],
    }


def separability_report_dict(report):
    ray = None
    if report.infeasibility_ray is not None:
        src = report.infeasibility_ray
        ray = {"y": _vec(src["y"]), "z": _vec(src["z"]),
               "valid": bool(src["valid"]),
               "identity_residual": _sig(src["identity_residual"]),
               "min_block_eig": _sig(src["min_block_eig"]),
               "objective": _sig(src["objective"])}
    residual = report.reconstruction_residual
    return {
        "status": report.status,
        "atoms": [{"a": _vec(a), "b": _vec(b)} for a, b in report.atoms],
        "reconstruction_residual": None if residual is None else _sig(residual),
        "infeasibility_ray": ray,
        "order_used": report.order_used,
        "flat_t": report.flat_t,
        "moment_rank": report.moment_rank,
        "seed": report.seed,
        "timings": {key: _sig(val) for key, val in report.timings.items()},
        "diagnostics": [[d[0], str(d[1]), str(d[2])]
                        for d in report.diagnostics],
    }


def _emit_text(doc, out):
    for key, val in doc.items():
        if key == "minimizers":
            out.write("minimizers: %d\n" % len(val))
            for m, entry in enumerate(val):
                out.write("  minimizer %d: u=%s v=%s value=%s\n"
                          % (m + 1, entry["u"], entry["v"], entry["value"]))
        elif key == "atoms":
            out.write("atoms: %d\n" % len(val))
            for m, entry in enumerate(val):
                out.write("  atom %d: a=%s b=%s\n"
                          % (m + 1, entry["a"], entry["b"]))
        elif key == "infeasibility_ray" and val is not None:
            out.write("infeasibility_ray: valid=%s min_block_eig=%s "
                      "objective=%s\n" % (val["valid"], val["min_block_eig"],
                                          val["objective"]))
        else:
            out.write("%s: %s\n" % (key, val))


def _emit(doc, fmt, out):
    if fmt == "json":
        json.dump(doc, out, indent=2)
        out.write("\n")
    else:
        _emit_text(doc, out)


_STATUS_EXIT = {
    positivity.STATUS_POSITIVE: 0,
    positivity.STATUS_NOT_POSITIVE: 1,
    separability.STATUS_SEPARABLE: 0,
    separability.STATUS_NOT_SEPARABLE: 1,
    positivity.STATUS_INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


def _load_document(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise InputError("%s is not valid JSON: %s" % (path, exc))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="posep",
        description="Positivity of linear maps and separability in "
                    "Kronecker subspaces via moment relaxations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("positivity", "decide positivity of a bi-quadratic form"),
            ("separability", "decide separability of a matrix")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("input", help="path to a JSON problem file")
        cmd.add_argument("--max-order", type=int, default=6)
        cmd.add_argument("--rank-tol", type=float, default=1e-6)
        cmd.add_argument("--psd-tol", type=float, default=1e-7)
        cmd.add_argument("--eq-tol", type=float, default=1e-6)
        cmd.add_argument("--solver-tol", type=float, default=1e-8)
        cmd.add_argument("--seed", type=int, default=0)
        cmd.add_argument("--format", choices=("json", "text"),
                         default="json")
        cmd.add_argument("--dump-sdp", metavar="PATH")
        if name == "positivity":
            cmd.add_argument("--positivity-tol", type=float, default=1e-6)
    return parser


def _run_positivity(args, out):
    form = parse_positivity_input(_load_document(args.input))
    if args.dump_sdp:
        dump_problem(positivity.build_relaxation(form, positivity.MIN_ORDER),
                     args.dump_sdp)
    report = positivity.check_positivity(
        form, k_max=args.max_order, positivity_tol=args.positivity_tol,
        seed=args.seed, rank_tol=args.rank_tol, psd_tol=args.psd_tol,
        eq_tol=args.eq_tol, solver_tol=args.solver_tol)
    _emit(positivity_report_dict(report), args.format, out)
    return _STATUS_EXIT[report.status]


def _run_separability(args, out):
    A = parse_separability_input(_load_document(args.input))
    if args.dump_sdp:
        problem = separability.build_relaxation(
            A.p, A.q, A.project_to_E(),
            separability.random_sos_objective(A.p, A.q, args.seed),
            separability.MIN_ORDER)
        dump_problem(problem, args.dump_sdp)
    report = separability.check_separability(
        A, k_max=args.max_order, seed=args.seed, rank_tol=args.rank_tol,
        psd_tol=args.psd_tol, eq_tol=args.eq_tol,
        solver_tol=args.solver_tol)
    _emit(separability_report_dict(report), args.format, out)
    return _STATUS_EXIT[report.status]


def console_main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    runner = (_run_positivity if args.command == "positivity"
              else _run_separability)
    try:
        return runner(args, out)
    except InputError as exc:
        err.write("posep: %s\n" % exc)
        return EXIT_USAGE
    except ValueError as exc:
        err.write("posep: %s\n" % exc)
        return EXIT_USAGE
    except Exception as exc:
        err.write("posep: internal error: %s\n" % exc)
        return EXIT_ERROR
