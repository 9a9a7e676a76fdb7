"""Command-line front end: ``solve``, ``verify``, ``resonances`` and ``sweep``.

Exit codes: 0 success, 1 validation or property failure, 2 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classical, oracle, verification, vvp
from .core import HermitianOperator, PerturbationError, PerturbationProblem, validate_problem

log = logging.getLogger("vvhori")

CSV_COLUMNS = ["epsilon", "level", "order", "E_series", "E_exact", "abs_err",
               "residual_conj", "equiv_delta"]
SWEEP_COLUMNS = ["epsilon", "level", "order", "E_series", "E_exact", "abs_err"]


class InputError(Exception):
    """Problem file could not be parsed; maps to exit code 2."""


@dataclass
class ProblemFile:
    problem: PerturbationProblem
    epsilons: list


# -- parsing -----------------------------------------------------------------

def _matrix(value, field: str, n: int) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"field '{field}' must be an {n}x{n} array of numbers") from None
    if a.shape != (n, n):
        raise InputError(f"field '{field}' must have shape {n}x{n}, got {list(a.shape)}")
    return a


def parse_problem(doc) -> ProblemFile:
    """Build a (not yet validated) problem from a decoded JSON document."""
    if not isinstance(doc, dict):
        raise InputError("problem file must be a JSON object")
    for key in ("e0", "max_order"):
        if key not in doc:
            raise InputError(f"missing field '{key}'")
    try:
        e0 = [float(x) for x in doc["e0"]]
    except (TypeError, ValueError):
        raise InputError("field 'e0' must be an array of numbers") from None
    n = len(e0)
    if n == 0:
        raise InputError("field 'e0' must not be empty")
    if "dim" in doc and doc["dim"] != n:
        raise InputError(f"field 'dim' is {doc['dim']!r} but 'e0' has {n} entries")
    max_order = doc["max_order"]
    if not isinstance(max_order, int) or isinstance(max_order, bool) or max_order < 0:
        raise InputError("field 'max_order' must be a non-negative integer")

    perts = {}
    for i, entry in enumerate(doc.get("perturbations", [])):
        where = f"perturbations[{i}]"
        if not isinstance(entry, dict):
            raise InputError(f"field '{where}' must be an object")
        order = entry.get("order")
        if not isinstance(order, int) or isinstance(order, bool) or order < 1:
            raise InputError(f"field '{where}.order' must be an integer >= 1")
        if "matrix_real" not in entry:
            raise InputError(f"missing field '{where}.matrix_real'")
        re = _matrix(entry["matrix_real"], f"{where}.matrix_real", n)
        im = _matrix(entry.get("matrix_imag", np.zeros((n, n))), f"{where}.matrix_imag", n)
        if order in perts:
            raise InputError(f"field '{where}.order' repeats order {order}")
        perts[order] = re + 1j * im

    epsilons = doc.get("epsilons", [])
    try:
        epsilons = [float(x) for x in epsilons]
    except (TypeError, ValueError):
        raise InputError("field 'epsilons' must be an array of numbers") from None

    tols = doc.get("tolerances") or {}
    if not isinstance(tols, dict):
        raise InputError("field 'tolerances' must be an object")
    kwargs = {}
    for key in ("gap_tol", "herm_tol"):
        if key in tols:
            try:
                kwargs[key] = float(tols[key])
            except (TypeError, ValueError):
                raise InputError(f"field 'tolerances.{key}' must be a number") from None
    shift = doc.get("zero_shift")
    if shift is not None:
        try:
            shift = float(shift)
        except (TypeError, ValueError):
            raise InputError("field 'zero_shift' must be a number") from None

    herm_tol = kwargs.get("herm_tol", 1e-12)
    ops = {m: HermitianOperator(v, tol=herm_tol) for m, v in perts.items()}
    problem = PerturbationProblem(e0=np.array(e0), perturbations=ops, max_order=max_order,
                                  zero_shift=shift, **kwargs)
    return ProblemFile(problem, epsilons)


def load_problem(path) -> tuple[PerturbationProblem, list]:
    """Read and validate a problem file.

    Raises ``InputError`` on parse problems and ``PerturbationError`` on a
    well-formed but invalid problem.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON (line {exc.lineno}, column {exc.colno}: {exc.msg})") from None
    pf = parse_problem(doc)
    return validate_problem(pf.problem), pf.epsilons


# -- encoding ----------------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON encoder that prints every float with :func:`fmt`."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row[c] if isinstance(row[c], int) else fmt(row[c]) for c in columns])
    return buf.getvalue()


# -- report assembly ---------------------------------------------------------

def _resonance_dict(scan: classical.ResonanceScan) -> dict:
    return {
        "max_order": scan.max_order,
        "k_bound": scan.k_bound,
        "tol": scan.tol,
        "found": [{"k": list(r.k), "order": r.order} for r in scan],
        "mode_difference": scan.mode_difference,
    }


def _epsilon_record(p, sol, hori, eps) -> tuple[dict, list]:
    order = p.max_order
    exact = oracle.exact_spectrum(p, eps)
    match = oracle.match_eigenpairs(vvp.energies(sol, eps), vvp.eigenvectors(sol, eps), exact)
    e_exact = exact.eigenvalues[match.perm]
    series, hori_e, errors, equiv, conj = [], [], [], [], []
    for m in range(order + 1):
        es = vvp.energies(sol.truncated(m), eps)
        eh = hori.energies(eps, order=m)
        series.append(es)
        hori_e.append(eh)
        errors.append(np.abs(es - e_exact))
        equiv.append(np.abs(es - eh))
        conj.append(vvp.residuals(sol.truncated(m), eps).conjugation)
    res = vvp.residuals(sol, eps)
    record = {
        "epsilon": eps,
        "exact_energies": e_exact,
        "match": match.perm,
        "series_energies": series,
        "hori_energies": hori_e,
        "abs_errors": errors,
        "vector_errors": match.vector_errors,
        "equiv_deltas": equiv,
        "residuals": {
            "conjugation": conj,
            "commutator_h0_k": res.commutator_h0_k,
            "homological": list(res.homological),
        },
    }
    rows = []
    for level in range(p.dim):
        for m in range(order + 1):
            rows.append({
                "epsilon": eps,
                "level": level + 1,
                "order": m,
                "E_series": series[m][level],
                "E_exact": e_exact[level],
                "abs_err": errors[m][level],
                "residual_conj": conj[m],
                "equiv_delta": equiv[m][level],
            })
    return record, rows


def build_report(p: PerturbationProblem, epsilons) -> dict:
    sol = vvp.vvp_expand(p)
    hori = classical.hori_expand(p)
    scan = classical.resonance_scan(p.shifted_e0, max(2, p.max_order + 1))
    records, rows = [], []
    for eps in sorted(set(epsilons)):
        rec, r = _epsilon_record(p, sol, hori, eps)
        records.append(rec)
        rows.extend(r)
    return {
        "problem": {
            "dim": p.dim,
            "e0": np.asarray(p.e0),
            "max_order": p.max_order,
            "gap_tol": p.gap_tol,
            "herm_tol": p.herm_tol,
        },
        "zero_shift": p.zero_shift,
        "series": {
            "k_diagonals": sol.k_diagonals() if p.max_order else [],
            "w_real": [sol.w(m).real for m in range(1, p.max_order + 1)],
            "w_imag": [sol.w(m).imag for m in range(1, p.max_order + 1)],
            "normal_form": hori.normal_form,
        },
        "resonances": _resonance_dict(scan),
        "records": records,
        "columns": CSV_COLUMNS,
        "rows": rows,
    }


def sweep_rows(p: PerturbationProblem, eps_grid, order: int | None = None) -> list:
    orders = range(1, p.max_order + 1) if order is None else [order]
    sol = vvp.vvp_expand(p)
    rows = []
    for eps in eps_grid:
        exact = oracle.exact_spectrum(p, eps)
        match = oracle.match_eigenpairs(vvp.energies(sol, eps), vvp.eigenvectors(sol, eps), exact)
        e_exact = exact.eigenvalues[match.perm]
        for level in range(p.dim):
            for m in orders:
                es = vvp.energies(sol.truncated(m), eps)[level]
                rows.append({"epsilon": eps, "level": level + 1, "order": m, "E_series": es,
                             "E_exact": e_exact[level], "abs_err": abs(es - e_exact[level])})
    return rows


def parse_grid(text: str) -> np.ndarray:
    """``START:STOP:POINTS`` to a geometric grid (a single point when POINTS is 1)."""
    try:
        start, stop, points = text.split(":")
        start, stop, points = float(start), float(stop), int(points)
    except ValueError:
        raise argparse.ArgumentTypeError("expected START:STOP:POINTS, e.g. 1e-1:1e-3:5") from None
    if points < 1:
        raise argparse.ArgumentTypeError("POINTS must be >= 1")
    if points == 1:
        return np.array([start])
    if start <= 0 or stop <= 0:
        raise argparse.ArgumentTypeError("grid end points must be positive")
    return np.geomspace(start, stop, points)


# -- commands ----------------------------------------------------------------

def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    p, epsilons = load_problem(args.file)
    report = build_report(p, epsilons)
    if args.format == "csv":
        _emit(rows_to_csv(report["rows"], CSV_COLUMNS), args.out)
    else:
        _emit(dumps(report) + "\n", args.out)
    return 0


def cmd_verify(args) -> int:
    p, _ = load_problem(args.file)
    if args.cases == 0:
        log.warning("--cases 0: no random problems checked")
    results = verification.run_suite(p, seed=args.seed, cases=args.cases)
    ok = all(r.passed for r in results)
    for r in results:
        rel = "<=" if r.sense == "le" else ">="
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<42s} worst={fmt(r.worst)}  ({rel} {r.tol:g})")
    print("all properties pass" if ok else "some properties FAILED")
    return 0 if ok else 1


def cmd_resonances(args) -> int:
    p, _ = load_problem(args.file)
    scan = classical.resonance_scan(p.shifted_e0, args.l, args.kbound)
    if p.zero_shift:
        print(f"# frequencies include zero_shift={fmt(p.zero_shift)}")
    if not scan.resonances:
        print("none")
    for r in scan:
        print(f"k=({', '.join(str(x) for x in r.k)}) order={r.order}")
    print(f"# mode-difference resonance: {'yes' if scan.mode_difference else 'no'}")
    return 0


def cmd_sweep(args) -> int:
    p, _ = load_problem(args.file)
    if args.order is not None and args.order > p.max_order:
        raise InputError(f"--order {args.order} exceeds max_order {p.max_order} of the problem file")
    rows = sweep_rows(p, args.eps_grid, args.order)
    _emit(rows_to_csv(rows, SWEEP_COLUMNS), args.out)
    return 0


def _min_order(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("minimum order is 2")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vvhori", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run both engines and the exact oracle")
    s.add_argument("file")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run the property suite")
    v.add_argument("file")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--cases", type=int, default=20)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("resonances", help="scan k . E = 0 up to order L")
    r.add_argument("file")
    r.add_argument("--l", type=_min_order, required=True)
    r.add_argument("--kbound", type=int)
    r.set_defaults(func=cmd_resonances)

    w = sub.add_parser("sweep", help="error versus eps CSV")
    w.add_argument("file")
    w.add_argument("--eps-grid", type=parse_grid, required=True)
    w.add_argument("--order", type=int)
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "cases", 0) < 0:
        parser.error("--cases must be >= 0")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PerturbationError as exc:
        print(f"invalid problem: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
