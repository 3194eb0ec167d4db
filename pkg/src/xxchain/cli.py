"""Command-line front end: spectra, metric matrices, perturbation tables, scans and self-checks.

Exit codes: 0 ok, 1 a verify check failed, 2 invalid input or failed
validation, 3 resource cap hit, 4 exceptional point (or past it).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import (
    ConstructionError,
    CrossValidationError,
    ExceptionalPointError,
    PreconditionError,
    ResourceLimitError,
)

log = logging.getLogger("xxchain")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_EXCEPTIONAL = 4

DEFAULT_TOLERANCES = {
    "root": 1e-10,  # Bethe root residual
    "dense": 1e-8,  # Bethe vs dense spectrum
    "metric": 1e-9,  # metric identities
    "relation": 1e-10,  # algebra relations and symmetry commutators
    "gram": 1e-8,  # Gram matrix identities
}


# ---------------------------------------------------------------------------
# argument parsing helpers


def parse_angle(text: str) -> float:
    """'0.5pi', 'pi/2', '-pi', '1/3pi' or a plain number of radians."""
    raw = text.strip().lower().replace(" ", "").replace("*", "")
    if "pi" not in raw:
        try:
            return float(raw)
        except ValueError as exc:
            raise PreconditionError(f"cannot read angle {text!r}") from exc
    head, _, tail = raw.partition("pi")
    try:
        factor = Fraction(head) if head not in ("", "+", "-") else Fraction(f"{head}1")
        if tail:
            if not tail.startswith("/"):
                raise ValueError
            factor /= Fraction(tail[1:])
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"cannot read angle {text!r}") from exc
    return float(factor) * math.pi


def parse_int_list(text: str) -> list[int]:
    """'5', '3,5,7' or the inclusive range '4-8'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise PreconditionError(f"empty list {text!r}")
    return out


def parse_float_list(text: str) -> list[float]:
    out = [float(p) for p in text.split(",") if p.strip()]
    if not out:
        raise PreconditionError(f"empty list {text!r}")
    return out


def parse_tolerances(items) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or key not in tol:
            raise PreconditionError(f"tolerance override must be one of {sorted(tol)} as name=value, got {item!r}")
        tol[key] = float(value)
        if tol[key] <= 0:
            raise PreconditionError(f"tolerance {key} must be positive")
    return tol


def _parse_sector(text):
    if text is None:
        return None
    return Fraction(text)


# ---------------------------------------------------------------------------
# output


def _plain(obj):
    """Convert numpy / complex / Fraction / sympy values into JSON-ready objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, Fraction):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enum
        return obj.value
    return str(obj)  # sympy numbers print exactly


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _emit_json(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit_json(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_emit_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _emit_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        return _format_float(obj)
    return json.dumps(obj)


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    return _emit_json(_plain(obj)) + "\n"


def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(args, tol: dict, **extra) -> dict:
    out = {"version": __version__, "command": args.command, "tolerances": tol}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# commands


def _spec(sites: int, g: float, theta: float, variant: str):
    from .chain import HamiltonianSpec
    return HamiltonianSpec.polar(sites, g, theta, variant)


def cmd_spectrum(args) -> int:
    from .bethe import bethe_spectrum, cross_validate_spectrum

    tol = parse_tolerances(args.tolerance)
    theta = parse_angle(args.theta)
    rows, runs = [], []
    for M in parse_int_list(args.sites):
        for g in parse_float_list(args.g):
            spec = _spec(M, g, theta, args.variant)
            spectrum = bethe_spectrum(spec.replace(variant="H"), tol=tol["root"])
            run = {"M": M, "g": g, "regime": spectrum.regime.value, "notes": spectrum.notes,
                   "worst_residual": spectrum.worst_residual}
            if args.dense:
                run["dense_mismatch"] = cross_validate_spectrum(spec, spectrum, tol=tol["dense"])
            runs.append(run)
            for j, (eps, res) in enumerate(zip(spectrum.energies, spectrum.residuals), start=1):
                rows.append([M, float(g), float(theta), j, float(eps.real), float(eps.imag), float(res)])
            log.info("M=%d g=%g: %s", M, g, spectrum.regime.value)
    if args.format == "csv":
        _write(args, _csv_text(["M", "g", "theta", "j", "Re_eps", "Im_eps", "residual"], rows))
        for run in runs:
            print(f"M={run['M']} g={run['g']}: regime {run['regime']}", file=sys.stderr)
    else:
        keys = ["M", "g", "theta", "j", "Re_eps", "Im_eps", "residual"]
        _write(args, dumps({"meta": _meta(args, tol, theta=theta, variant=args.variant),
                            "runs": runs, "rows": [dict(zip(keys, r)) for r in rows]}))
    return EXIT_OK


def cmd_metric(args) -> int:
    from .chain import DenseOperator, FullSpinBasis
    from .metric import build_c_operator, metric_for, metric_residuals

    tol = parse_tolerances(args.tolerance)
    theta = parse_angle(args.theta)
    (M,) = parse_int_list(args.sites)
    (g,) = parse_float_list(args.g)
    spec = _spec(M, g, theta, args.variant)
    bundle = metric_for(spec, force=args.force)
    residuals = metric_residuals(bundle)
    build_c_operator(bundle, tol=tol["metric"])
    sector = _parse_sector(args.sector)
    out = {"meta": _meta(args, tol, M=M, g=g, theta=theta, variant=args.variant,
                         positivity_margin=bundle.margin, log=bundle.log),
           "residuals": residuals}
    for name in ("eta", "h", "C"):
        op = bundle.operator(name, sector) if sector is not None else DenseOperator(
            getattr(bundle, name), FullSpinBasis(M))
        out[name] = op.to_json()
    _write(args, dumps(out))
    failed = {k: v for k, v in residuals.items() if v > tol["metric"]}
    if failed:
        print(f"metric identities above tolerance: {failed}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _coefficient_terms(op) -> list:
    out = []
    for x, y, plus, minus in op.pair_coefficients():
        for basis, value in (("a+", plus), ("a-", minus)):
            if value == 0:
                continue
            if op.exact:
                import sympy
                re, im = sympy.re(value), sympy.im(value)
                out.append({"x": x, "y": y, "re": str(re), "im": str(im), "basis": basis})
            else:
                value = complex(value)
                out.append({"x": x, "y": y, "re": value.real, "im": value.imag, "basis": basis})
    return out


def cmd_perturb(args) -> int:
    from .bch import lambda_prime_sequence, lambda_sequence, solve_h_series

    tol = parse_tolerances(args.tolerance)
    theta = parse_angle(args.theta)
    order = args.order
    (M,) = parse_int_list(args.sites)
    emit = args.emit
    if order < 0:
        raise PreconditionError("order must be non-negative")
    if emit in ("lambdas", "lambda-primes"):
        seq = lambda_sequence(order) if emit == "lambdas" else lambda_prime_sequence(order)
        values = [str(v) for v in seq]
        if args.format == "csv":
            _write(args, _csv_text(["k", "value"], [[k, v] for k, v in enumerate(values, 1)]))
        else:
            _write(args, dumps({"meta": _meta(args, tol, order=order), emit: values}))
        return EXIT_OK
    # at theta = pi/2 with odd order n, A_1..A_n already fix h through g^(n+1)
    imaginary = abs(theta - math.pi / 2) < 1e-12
    h_order = order + 1 if imaginary and order % 2 else order
    series = solve_h_series(M, h_order, theta) if order > 0 else None
    if emit == "p-table":
        table = series.p_table() if series else {}
        powers = sorted({p for entry in table.values() for p in entry})
        rows = [[x, n] + [str(table[(n, x)].get(p, 0)) for p in powers]
                for (n, x) in sorted(table, key=lambda k: (k[1], k[0]))]
        if args.format == "csv":
            _write(args, _csv_text(["x", "n"] + [f"g^{p}" for p in powers], rows))
        else:
            entries = [{"x": r[0], "n": r[1], "coefficients": dict(zip([f"g^{p}" for p in powers], r[2:]))}
                       for r in rows]
            _write(args, dumps({"meta": _meta(args, tol, M=M, order=order, h_order=h_order, theta=theta),
                                "p_table": entries}))
        return EXIT_OK
    key = "A" if emit == "A" else "h"
    terms = {}
    if series:
        source = series.A if key == "A" else series.h
        terms = {str(n): {"order": n, "terms": _coefficient_terms(op)} for n, op in source.items()
                 if key == "h" or n <= order}
    out = {"meta": _meta(args, tol, M=M, order=order, theta=theta), key: terms}
    if series and args.check is not None:
        from .bch import cross_validate_with_exact
        report = cross_validate_with_exact(M, args.check, theta, order=h_order, series=series)
        out["cross_check"] = report.to_json()
    if series:
        out["kernel_residuals"] = {str(k): float(v) for k, v in series.kernel_residuals.items()}
        worst = max(series.kernel_residuals.values(), default=0.0)
        if worst > 1e-10:
            _write(args, dumps(out))
            print(f"solvability residual {worst:.2e}", file=sys.stderr)
            return EXIT_VALIDATION
    _write(args, dumps(out))
    return EXIT_OK


def cmd_scan(args) -> int:
    from .bethe import default_scan_sites, groundstate_scan

    tol = parse_tolerances(args.tolerance)
    theta = parse_angle(args.theta)
    fits = []
    for g in parse_float_list(args.g):
        for parity in (0, 1) if args.parity == "both" else (int(args.parity == "odd"),):
            sites = [m for m in default_scan_sites(parity, args.min_sites, args.max_sites)]
            fit = groundstate_scan(g, theta, sites=sites)
            entry = {"g": g, "parity": "odd" if parity else "even", "sites": fit.sites,
                     "energies": fit.energies}
            entry.update(fit.to_json())
            fits.append(entry)
    if args.format == "csv":
        rows = [[f["g"], f["parity"], f["f_inf"], f["f_s"], f["c_eff"], f["rms"]] for f in fits]
        _write(args, _csv_text(["g", "parity", "f_inf", "f_s", "c_eff", "rms"], rows))
    else:
        _write(args, dumps({"meta": _meta(args, tol, theta=theta), "fits": fits}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _metric(spec):
    """Metric builder used by the verify suite (a seam for negative-control tests)."""
    from .metric import metric_for
    return metric_for(spec)


def _verify_checks(suite: str, tol: dict) -> list:
    from .algebra import (AlgebraTag, build_rep, check_symmetry, hecke_hamiltonian, jordan_analyze,
                          sector_matrix, tl_relation_audit, unit_circle_spec)
    from .bch import cross_validate_with_exact, solve_A_series
    from .bethe import cross_validate_spectrum
    from .chain import HamiltonianSpec, build_hamiltonian
    from .diagrams import check_conjecture, gram_matrix
    from .metric import metric_residuals

    top = 6 if suite == "fast" else 10
    checks = []

    def spectra():
        worst = 0.0
        for M in range(2, top + 1):
            for g, theta in ((0.3, math.pi / 2), (0.8, math.pi / 2), (0.6, 1.0)):
                worst = max(worst, cross_validate_spectrum(HamiltonianSpec.polar(M, g, theta),
                                                           tol=tol["dense"]))
        return worst <= tol["dense"], f"worst {worst:.1e}"

    def metrics():
        worst = 0.0
        for M in range(2, min(top, 8) + 1):
            for g, theta in ((0.5, math.pi / 2), (0.4, 1.0)):
                res = metric_residuals(_metric(HamiltonianSpec.polar(M, g, theta)))
                worst = max(worst, max(res.values()))
        return worst <= tol["metric"], f"worst {worst:.1e}"

    def series():
        report = cross_validate_with_exact(4, 0.1, order=3)
        agree = solve_A_series(5, 5, method="structured")
        direct = solve_A_series(5, 5, method="direct")
        same = all(agree.A[n].matrix == direct.A[n].matrix for n in agree.A)
        ok = report.passes(margin=0.3) and same
        return ok, f"slopes {report.eta_slope:.2f}/{report.h_slope:.2f}, structured==direct {same}"

    def algebras():
        worst = 0.0
        for M in range(3, min(top, 7) + 1):
            reps = [build_rep(AlgebraTag.GL11, M, 0.7), build_rep(AlgebraTag.UQ_SL2, M, 0.7),
                    build_rep(AlgebraTag.TEMPERLEY_LIEB, M, 0.7), build_rep(AlgebraTag.HECKE, M, theta=0.9)]
            if math.sin(M * 0.9) != 0:
                reps.append(build_rep(AlgebraTag.UQ_GL11, M, theta=0.9))
            for rep in reps:
                worst = max(worst, rep.worst_relation())
                if rep.tag is AlgebraTag.HECKE:
                    # H is built from the b_i, so compare it with H' instead of commuting
                    H = build_hamiltonian(unit_circle_spec(M, 0.9))
                    worst = max(worst, float(np.abs(hecke_hamiltonian(rep) - H).max()))
                elif rep.tag is not AlgebraTag.TEMPERLEY_LIEB:
                    worst = max(worst, max(check_symmetry(rep).values()))
            worst = max(worst, max(tl_relation_audit(M, 1.0).values()))
        return worst <= tol["relation"], f"worst {worst:.1e}"

    def jordan():
        rep = jordan_analyze(sector_matrix(HamiltonianSpec.hg(4, 1.0), 0))
        ok = (rep.blocks_at(math.sqrt(2)) == (2,) and rep.blocks_at(-math.sqrt(2)) == (2,))
        below = jordan_analyze(sector_matrix(HamiltonianSpec.hg(4, 0.95), 0))
        return ok and below.diagonalizable, f"blocks at sqrt2 {rep.blocks_at(math.sqrt(2))}"

    def gram():
        sizes = (3, 5) if suite == "fast" else (3, 5, 7)
        bad, worst = 0, 0.0
        for M in sizes:
            metric = _metric(HamiltonianSpec.hg(M, 1.0))
            for m in range(M + 1):
                G = gram_matrix(M, m, metric)
                worst = max(worst, G.residuals["G symmetric real"], G.residuals["det G - 1"],
                            G.residuals["G H - H^t G"], G.residuals["M* G M - G"])
                bad += len(check_conjecture(M, m, G, metric).violations)
        return bad == 0 and worst <= tol["gram"], f"violations {bad}, identities {worst:.1e}"

    checks += [("bethe vs dense spectra", spectra), ("metric identities", metrics),
               ("perturbation series", series), ("algebra relations", algebras),
               ("jordan structure", jordan), ("gram conjecture", gram)]
    return checks


def run_verify(suite: str = "fast", tol: dict | None = None, stream=None) -> int:
    tol = tol or dict(DEFAULT_TOLERANCES)
    stream = stream or sys.stdout
    failures = 0
    for name, check in _verify_checks(suite, tol):
        start = time.perf_counter()
        try:
            ok, detail = check()
        except (ConstructionError, CrossValidationError, ExceptionalPointError) as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<24} {detail} ({time.perf_counter() - start:.1f}s)",
              file=stream)
    print(f"{'all checks passed' if not failures else f'{failures} check(s) failed'}", file=stream)
    return EXIT_OK if not failures else EXIT_VERIFY


def cmd_verify(args) -> int:
    return run_verify(args.suite, parse_tolerances(args.tolerance))


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xxchain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sites="5", g="1.0"):
        p.add_argument("--sites", default=sites, help="M, a list '3,5' or a range '4-8'")
        p.add_argument("--g", default=g, help="coupling or comma-separated list")
        p.add_argument("--theta", default="0.5pi", help="angle, e.g. '0.5pi' or radians")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                       help=f"override one of {sorted(DEFAULT_TOLERANCES)}")

    p = sub.add_parser("spectrum", help="Bethe single-particle spectrum")
    common(p)
    p.add_argument("--variant", default="H", choices=("H", "Hprime", "Hg"))
    p.add_argument("--dense", action="store_true", help="cross-check against dense diagonalization")
    p.set_defaults(func=cmd_spectrum, format="csv")

    p = sub.add_parser("metric", help="eta, h and C matrices")
    common(p, sites="3")
    p.add_argument("--variant", default="H", choices=("H", "Hprime", "Hg"))
    p.add_argument("--sector", help="S^z value, e.g. 1/2; default full space")
    p.add_argument("--force", action="store_true", help="build even off the unit circle")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("perturb", help="perturbative A and h tables")
    common(p, sites="6")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--emit", default="A", choices=("lambdas", "lambda-primes", "A", "h", "p-table"))
    p.add_argument("--check", type=float, help="cross-validate against the exact metric at this g")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("scan", help="groundstate finite-size scaling fit")
    common(p, g="0.0,1.0")
    p.add_argument("--parity", choices=("even", "odd", "both"), default="both")
    p.add_argument("--min-sites", type=int, default=64)
    p.add_argument("--max-sites", type=int, default=1024)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    p.add_argument("--tolerance", action="append", metavar="NAME=VALUE")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ExceptionalPointError as exc:
        print(f"exceptional point: {exc}", file=sys.stderr)
        return EXIT_EXCEPTIONAL
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (PreconditionError, CrossValidationError, ConstructionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
