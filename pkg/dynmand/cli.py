"""
Command-line entry point.

    dynmand <subcommand> --family "x^2+l" --c "l" [options]

Exit status is 0 on success, 2 when a precondition or hypothesis fails (the
reason is emitted as JSON), and 1 on an internal error.
"""

import argparse
import json
import logging
import logging.config
import os
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from dynmand.bottcher import bottcher_product, check_conjugacy, critical_radius
from dynmand.config import LOGGING_CONFIG, NUMERIC_PARAMS, RENDER_PARAMS
from dynmand.errors import (
    CertificationError,
    DegreeCapExceeded,
    DegreeError,
    DynmandError,
    FamilyParseError,
    HypothesisError,
    OutsideCertifiedDomain,
)
from dynmand.export import GridExporter, grid_payload, prep_solutions_csv, write_json
from dynmand.grammar import parse_family, parse_lam_poly, parse_polynomial
from dynmand.guard import ResourceGuard
from dynmand.heights import global_height, local_height_nonarch
from dynmand.mandelbrot import capacity_estimate, membership, param_green, render_grid
from dynmand.places import Place, good_places
from dynmand.poly_core import degree_hypothesis, format_fraction, is_normal_form, normalize_polynomial
from dynmand.preperiodic import (
    adelic_height,
    adelic_height_conjugates,
    equidist_potential,
    prep_roots,
    shared_prep_experiment,
)

logger = logging.getLogger("dynmand.cli")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PRECONDITION = 2

PRECONDITION_ERRORS = (
    FamilyParseError,
    DegreeError,
    DegreeCapExceeded,
    HypothesisError,
    CertificationError,
    OutsideCertifiedDomain,
)


class PreconditionFailed(DynmandError):
    """A run finished but its report says a hypothesis did not hold."""

    def __init__(self, payload: Dict[str, Any]):
        self.payload = payload
        super().__init__(payload.get("reason", "precondition failed"))


def setup_logging(verbose: bool = False):
    """Set up logging configuration."""
    logging.config.dictConfig(LOGGING_CONFIG)
    if verbose:
        logging.getLogger("dynmand").setLevel(logging.DEBUG)


def parse_value(text: str) -> Any:
    """
    Read a parameter value: rationals and decimals ("1/2", "-3", "0.25") stay
    exact, anything else ("0.3+0.2i") is read as a complex float.
    """
    text = str(text).strip()
    try:
        return Fraction(text)
    except ValueError:
        pass
    try:
        return complex(text.replace("i", "j").replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: '{text}'")


def parse_float_list(text: Any) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _add_common(p: argparse.ArgumentParser, needs_c: bool = True):
    p.add_argument("--family", help='Family in x and l, e.g. "x^2+l"')
    if needs_c:
        p.add_argument("--c", help='Marked point, a polynomial in l, e.g. "l"')
    p.add_argument("--tol", type=float, default=None, help="Error tolerance")
    p.add_argument("--degree-cap", type=int, default=None, help="Largest symbolic iterate degree")
    p.add_argument("--iter-cap", type=int, default=None, help="Archimedean iteration cap")
    p.add_argument("--threads", type=int, default=None, help="Worker processes (else DYNMAND_THREADS)")
    p.add_argument("--config", default=None, help="JSON file whose keys mirror the long flags")
    p.add_argument("--output", default=None, help="Output path; JSON goes to stdout when omitted")
    p.add_argument("--format", default=None, choices=["json", "csv", "pgm"], help="Output format")
    p.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynmand",
        description="Heights, Green's functions and preperiodic parameters of polynomial families",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("height", help="G_c(lambda) and the canonical height of c(lambda)")
    _add_common(p)
    p.add_argument("--lam", required=False, default=None, help="Parameter value")
    p.add_argument("--place", type=int, default=None, help="Prime p for the local height at p")

    p = sub.add_parser("render", help="Grid of G_c over a parameter window")
    _add_common(p)
    p.add_argument("--window", default=None, help="x_min,x_max,y_min,y_max")
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--ny", type=int, default=None)
    p.add_argument("--g-cap", type=float, default=None, help="Green value mapped to white")

    p = sub.add_parser("capacity", help="Capacity estimate of M_c")
    _add_common(p)
    p.add_argument("--radii", default=None, help="Comma-separated circle radii")
    p.add_argument("--samples", type=int, default=None, help="Samples per circle")

    p = sub.add_parser("prep", help="Preperiodic parameters of c")
    _add_common(p)
    p.add_argument("--max-n", type=int, default=None)

    p = sub.add_parser("equidist", help="Potential of the preperiodic root sets at w")
    _add_common(p)
    p.add_argument("--max-n", type=int, default=None)
    p.add_argument("--w", default=None, help="Exterior point")

    p = sub.add_parser("adelic", help="Sum over places of G_{c,v}(lambda) for rational lambda")
    _add_common(p)
    p.add_argument("--lam", default=None)
    p.add_argument("--minpoly", default=None, help="Integer minimal polynomial in l of an algebraic parameter")

    p = sub.add_parser("verify-theorem", help="Shared preperiodic parameters of a and b")
    _add_common(p, needs_c=False)
    p.add_argument("--a", default=None)
    p.add_argument("--b", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--max-n", type=int, default=None)
    p.add_argument("--pairing-tol", type=float, default=None)

    p = sub.add_parser("good-places", help="Primes of good and bad reduction for (F, c)")
    _add_common(p)

    p = sub.add_parser("normalize", help="Normal form of a polynomial in x")
    _add_common(p, needs_c=False)
    p.add_argument("--poly", default=None)

    p = sub.add_parser("bottcher", help="Böttcher coordinate of f_lambda at z")
    _add_common(p, needs_c=False)
    p.add_argument("--lam", default=None)
    p.add_argument("--z", default=None)

    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON config; keys use the long flag names with dashes or underscores."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Flags win over the config file; the file fills only what was not given."""
    if not args.config:
        return args
    for key, value in load_config_file(args.config).items():
        if key in ("command", "config", "stdout"):
            continue
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def _require(args: argparse.Namespace, *names: str):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ValueError(f"{args.command} needs {flags}")


def _family_and_c(args: argparse.Namespace):
    _require(args, "family", "c")
    return parse_family(args.family), parse_lam_poly(args.c)


def _guard(args: argparse.Namespace) -> ResourceGuard:
    return ResourceGuard(degree_cap=args.degree_cap, iter_cap=args.iter_cap)


def _tol(args: argparse.Namespace) -> float:
    tol = args.tol if args.tol is not None else NUMERIC_PARAMS["tol"]
    if tol <= 0:
        raise ValueError(f"tol must be positive (got {tol})")
    return tol


def _threads(args: argparse.Namespace) -> int:
    threads = args.threads or RENDER_PARAMS["threads"]
    if threads < 1:
        raise ValueError(f"threads must be at least 1 (got {threads})")
    return threads


def _hypothesis_or_fail(family, c):
    ok, reason = degree_hypothesis(family, c)
    if not ok:
        raise HypothesisError(reason)


def cmd_height(args: argparse.Namespace) -> Dict[str, Any]:
    family, c = _family_and_c(args)
    _require(args, "lam")
    lam = parse_value(args.lam)
    tol, guard = _tol(args), _guard(args)
    report: Dict[str, Any] = {"family": str(family), "c": str(c), "lambda": _value_json(lam)}
    if args.place is not None:
        if not isinstance(lam, Fraction):
            raise ValueError("--place needs a rational --lam")
        place = Place.prime(args.place)
        h = local_height_nonarch(family.specialize(lam), c.evaluate(lam), place.p, guard=guard)
        report["place"] = place.to_json()
        report["local_height"] = h.to_dict()
        return report
    green = param_green(family, c, lam, tol=tol, guard=guard)
    report["G_c"] = green.to_dict()
    report["membership"] = membership(family, c, lam, tol=tol, guard=guard).kind
    if isinstance(lam, Fraction):
        report["canonical_height"] = global_height(family, lam, c.evaluate(lam), tol=tol, guard=guard).to_dict()
    return report


def cmd_render(args: argparse.Namespace) -> Optional[Dict[str, Any]]:
    family, c = _family_and_c(args)
    _hypothesis_or_fail(family, c)
    window = parse_float_list(args.window) if args.window is not None else [-2.5, 1.0, -1.5, 1.5]
    if len(window) != 4:
        raise ValueError(f"--window needs four numbers (got {window})")
    nx = args.nx or 200
    ny = args.ny or nx
    threads = _threads(args)
    grid = render_grid(family, c, window, nx, ny, tol=_tol(args), threads=threads, guard=_guard(args))
    fmt = args.format or "json"
    header = {"family": str(family), "c": str(c)}
    if args.output is None:
        if fmt != "json":
            raise ValueError(f"--format {fmt} needs --output")
        return grid_payload(grid, args.g_cap, header)
    out_dir, name = os.path.split(os.path.abspath(args.output))
    stem = os.path.splitext(name)[0]
    exporter = GridExporter(out_dir, g_cap=args.g_cap, threads=threads)
    path = exporter.export(grid, stem, fmt, extra=header)
    logger.info(f"render written to {path}")
    return None


def cmd_capacity(args: argparse.Namespace) -> Dict[str, Any]:
    family, c = _family_and_c(args)
    radii = parse_float_list(args.radii) if args.radii is not None else [1e3, 1e4, 1e5]
    samples = args.samples or 64
    fit = capacity_estimate(family, c, radii, samples_per_circle=samples, tol=_tol(args), guard=_guard(args))
    return {"family": str(family), "c": str(c), **fit.to_dict()}


def cmd_prep(args: argparse.Namespace) -> Optional[Dict[str, Any]]:
    family, c = _family_and_c(args)
    max_n = args.max_n or 2
    result = prep_roots(family, c, max_n, tol=_tol(args), threads=_threads(args), guard=_guard(args))
    # CSV unless --format json
    if (args.format or "csv") == "csv":
        prep_solutions_csv(result.solutions, path=args.output, stream=args.stdout)
        return None
    return {"family": str(family), "c": str(c), "max_n": max_n, **result.to_dict()}


def cmd_equidist(args: argparse.Namespace) -> Dict[str, Any]:
    family, c = _family_and_c(args)
    w = parse_value(args.w) if args.w is not None else Fraction(3)
    max_n = args.max_n or 5
    report = equidist_potential(family, c, max_n, complex(w), tol=_tol(args), guard=_guard(args))
    return {"family": str(family), "c": str(c), **report.to_dict()}


def cmd_adelic(args: argparse.Namespace) -> Dict[str, Any]:
    family, c = _family_and_c(args)
    if args.minpoly is not None:
        report = adelic_height_conjugates(family, c, parse_lam_poly(args.minpoly), tol=_tol(args), guard=_guard(args))
        return {"family": str(family), "c": str(c), **report.to_dict()}
    _require(args, "lam")
    lam = parse_value(args.lam)
    if not isinstance(lam, Fraction):
        raise ValueError(f"adelic needs a rational --lam (got {args.lam})")
    report = adelic_height(family, c, lam, tol=_tol(args), guard=_guard(args))
    return {"family": str(family), "c": str(c), **report.to_dict()}


def cmd_verify_theorem(args: argparse.Namespace) -> Dict[str, Any]:
    _require(args, "family", "a", "b")
    family = parse_family(args.family)
    a, b = parse_lam_poly(args.a), parse_lam_poly(args.b)
    report = shared_prep_experiment(
        family, a, b,
        k=args.k or 0,
        l=args.l or 0,
        max_n=args.max_n or 3,
        tol=_tol(args),
        pairing_tol=args.pairing_tol,
        threads=_threads(args),
        guard=_guard(args),
    )
    payload = {"family": str(family), "a": str(a), "b": str(b), **report.to_dict()}
    if report.verdict == "hypothesis_fails":
        raise PreconditionFailed({"reason": "hypothesis_fails", **payload})
    return payload


def cmd_good_places(args: argparse.Namespace) -> Dict[str, Any]:
    family, c = _family_and_c(args)
    return {"family": str(family), "c": str(c), **good_places(family, c).to_dict()}


def cmd_normalize(args: argparse.Namespace) -> Dict[str, Any]:
    _require(args, "poly")
    f = parse_polynomial(args.poly)
    norm = normalize_polynomial(f)
    payload = {"input": str(f), "already_normal": is_normal_form(f), **norm.to_dict()}
    if norm.exact:
        payload["normal_form"] = str(norm.g)
    return payload


def cmd_bottcher(args: argparse.Namespace) -> Dict[str, Any]:
    _require(args, "family", "lam", "z")
    family = parse_family(args.family)
    lam, z = parse_value(args.lam), parse_value(args.z)
    f = family.specialize(lam)
    tol = _tol(args)
    phi = bottcher_product(f, complex(z), tol=tol, guard=_guard(args))
    return {
        "family": str(family),
        "lambda": _value_json(lam),
        "z": _value_json(z),
        "phi": phi.to_dict(),
        "conjugacy": check_conjugacy(f, complex(z), tol=tol).to_dict(),
        "critical": critical_radius(f, tol=tol).to_dict(),
    }


def _value_json(v: Any) -> Any:
    if isinstance(v, Fraction):
        return format_fraction(v)
    return {"re": v.real, "im": v.imag}


COMMANDS = {
    "height": cmd_height,
    "render": cmd_render,
    "capacity": cmd_capacity,
    "prep": cmd_prep,
    "equidist": cmd_equidist,
    "adelic": cmd_adelic,
    "verify-theorem": cmd_verify_theorem,
    "good-places": cmd_good_places,
    "normalize": cmd_normalize,
    "bottcher": cmd_bottcher,
}


def _error_payload(command: str, e: Exception) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"command": command, "error": type(e).__name__, "message": str(e)}
    for attr in ("position", "predicted", "cap", "failing_lambda", "reason"):
        value = getattr(e, attr, None)
        if value is not None:
            payload[attr] = value if isinstance(value, (int, float, str)) else str(value)
    return payload


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    """
    Parse argv, dispatch the subcommand and emit its report.

    Returns:
        int: exit status (0 ok, 2 precondition or hypothesis failure, 1 internal error)
    """
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    args.stdout = stdout
    try:
        args = merge_config(args)
        payload = COMMANDS[args.command](args)
    except PreconditionFailed as e:
        write_json(e.payload, stream=stdout)
        return EXIT_PRECONDITION
    except PRECONDITION_ERRORS + (ValueError, argparse.ArgumentTypeError, OSError) as e:
        logger.warning(f"{args.command}: {e}")
        write_json(_error_payload(args.command, e), stream=stdout)
        return EXIT_PRECONDITION
    except Exception as e:
        logger.exception(f"{args.command} failed: {e}")
        return EXIT_INTERNAL

    if payload is not None:
        if args.output and (args.format or "json") == "json":
            write_json(payload, path=args.output)
        else:
            write_json(payload, stream=stdout)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
