"""
Command-line entry point.

    python qi_moments.py moments --operator phi2 --n-max 4
    python qi_moments.py lower-bound --operator phidot2 --N 2..12 --accelerate
    python qi_moments.py nucleation --volume 1cm3 --time 1s --count 1
    python qi_moments.py brain --mass 1kg --size 10cm --time 0.3s

Exit status: 0 success, 2 invalid configuration, 3 insufficient table
depth, 4 numerical non-convergence.
"""

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from mpmath import mpf

sys.path.append(str(Path(__file__).parent))
from core.conversions import parse_quantity, safe_fraction_conversion
from core.data_models import DEFAULT_DIGITS, DEFAULT_N_MAX, OutputFormat, RunConfig
from core.exceptions import InvalidConfigError
from processors.moment_processor import MomentProcessor
from export_tables import export_rows


# Operator used when --operator is not given
COMMAND_DEFAULT_OPERATOR = {
    "fit": "rhoEM",
    "nucleation": "rhoEM",
    "cdf-bound": "rhoEM",
    "tail": "rhoEM",
}


def parse_n_range(text: str) -> Tuple[int, int]:
    """'2..12' or a single '7'."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return int(lo), int(hi)
        return int(text), int(text)
    except ValueError:
        raise InvalidConfigError(f"cannot read N range '{text}' (expected e.g. 2..12)")


def parse_pair(text: str, separator: str = ":") -> Tuple[int, int]:
    try:
        lo, hi = text.split(separator, 1)
        return int(lo), int(hi)
    except ValueError:
        raise InvalidConfigError(f"cannot read '{text}' (expected e.g. 21{separator}33)")


def parse_rational_list(text: str) -> Tuple[Fraction, ...]:
    return tuple(safe_fraction_conversion(part, "list") for part in text.split(",") if part.strip())


def parse_float_triple(text: str) -> Tuple[float, float, int]:
    try:
        lo, hi, points = text.split(",")
        return float(lo), float(hi), int(points)
    except ValueError:
        raise InvalidConfigError(f"cannot read grid '{text}' (expected min,max,points)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--operator", default=None, help="phi2, phidot2, E2, B2, rhoS or rhoEM")
    common.add_argument("--weights", type=Path, default=None, help="JSON file with p and species weights")
    common.add_argument("--n-max", type=int, default=DEFAULT_N_MAX)
    common.add_argument("--digits", type=int, default=DEFAULT_DIGITS)
    common.add_argument("--cache-dir", type=Path, default=None)
    common.add_argument("--no-cache", action="store_true")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value)
    common.add_argument("--output", type=Path, default=None)
    common.add_argument("--debug", action="store_true")

    parser = argparse.ArgumentParser(description="Exact moments and lower bounds for Lorentzian-smeared quadratic operators")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("moments", parents=[common], help="exact connected and full moments")

    for name in ("lower-bound", "accelerate"):
        p = sub.add_parser(name, parents=[common], help="Stieltjes lower bounds y_N")
        p.add_argument("--N", dest="N_range", default=None, help="range such as 2..12")
        p.add_argument("--chain", default=None, help="acceleration orders, innermost first, e.g. 1/2,1,3/2")
        if name == "lower-bound":
            p.add_argument("--accelerate", action="store_true")
            p.add_argument("--extrapolate", dest="exponents", default=None, help="basis exponents, e.g. 0,1,2")
            p.add_argument("--window", default=None, help="fit window such as 21:33")

    p = sub.add_parser("extrapolate", parents=[common], help="least-squares y_inf")
    p.add_argument("--exponents", default=None, help="basis exponents, e.g. 0,1/2,1,3/2")
    p.add_argument("--window", default=None, help="fit window such as 21:33")

    p = sub.add_parser("tail", parents=[common], help="tail constants c0, a")
    p.add_argument("--n-pair", default=None, help="calibration moments such as 64:65")

    p = sub.add_parser("fit", parents=[common], help="model density for rhoEM")
    p.add_argument("--fit-n-max", type=int, default=None)
    p.add_argument("--tol", default=None)
    p.add_argument("--spike-cutoff", default=None, help="t cut for the spike term; 0 integrates it exactly")
    p.add_argument("--grid", default=None, help="x grid as min,max,points")

    p = sub.add_parser("cdf-bound", parents=[common], help="tail probability bounds")
    p.add_argument("--lambda-grid", default=None, help="lambda grid as min,max,points (log spaced)")
    p.add_argument("--n-pair", default=None)
    p.add_argument("--c0", default=None)
    p.add_argument("--a", default=None)

    p = sub.add_parser("nucleation", parents=[common], help="black-hole nucleation count or mass")
    p.add_argument("--volume", default="1cm3")
    p.add_argument("--time", default="1s")
    p.add_argument("--count", default=None, help="expected number; solves for the mass")
    p.add_argument("--mass", default=None, help="mass in Planck units; computes the count")
    p.add_argument("--four-volume", default=None, help="VT / l_p^4 override")
    p.add_argument("--n-pair", default=None, help="calibration moments such as 64:65")
    p.add_argument("--c0", default=None)
    p.add_argument("--a", default=None)

    p = sub.add_parser("brain", parents=[common], help="Boltzmann-brain exponent")
    p.add_argument("--mass", default="1kg")
    p.add_argument("--size", default="10cm")
    p.add_argument("--time", default="0.3s")

    p = sub.add_parser("gamma-moments", parents=[common], help="shifted Gamma moments")
    p.add_argument("--x0", default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--beta", default=None)
    p.add_argument("--central-charge", default=None)
    p.add_argument("--compare", action="store_true", help="check against the operator's table")

    sub.add_parser("diagnostics", parents=[common], help="growth diagnostics and dominant-graph bracket")

    p = sub.add_parser("additivity", parents=[common], help="y_inf species-counting relations for p = 3")
    p.add_argument("--exponents", default=None, help="basis exponents, e.g. 0,1/2,1,3/2")
    p.add_argument("--window", default=None, help="fit window such as 21:33")
    p.add_argument("--uncertainty", default=None, help="allowed y_inf error per operator")

    p = sub.add_parser("run-polynomial", parents=[common], help="run-structure polynomial term map")
    p.add_argument("--n", type=int, default=4)
    return parser


def _command_options(args: argparse.Namespace) -> Dict[str, Any]:
    """Typed options for the processor; only what was given on the command line."""
    options: Dict[str, Any] = {"no_cache": args.no_cache}
    command = args.command

    if getattr(args, "N_range", None):
        options["N_range"] = parse_n_range(args.N_range)
    if getattr(args, "chain", None):
        options["chain"] = parse_rational_list(args.chain)
    if getattr(args, "accelerate", False):
        options["accelerate"] = True
    if getattr(args, "exponents", None):
        options["exponents"] = parse_rational_list(args.exponents)
    if getattr(args, "window", None):
        options["window"] = parse_pair(args.window)
    if getattr(args, "n_pair", None):
        options["n_pair"] = parse_pair(args.n_pair)
    if getattr(args, "c0", None) is not None and getattr(args, "a", None) is not None:
        options["c0"], options["a"] = mpf(args.c0), mpf(args.a)

    if command == "fit":
        if args.fit_n_max is not None:
            options["fit_n_max"] = args.fit_n_max
        if args.tol is not None:
            options["tol"] = mpf(args.tol)
        if args.spike_cutoff is not None:
            options["spike_cutoff"] = mpf(args.spike_cutoff)
        if args.grid:
            options["grid"] = parse_float_triple(args.grid)
    elif command == "cdf-bound" and args.lambda_grid:
        options["lambda_grid"] = parse_float_triple(args.lambda_grid)
    elif command == "nucleation":
        options["volume"] = parse_quantity(args.volume, "cm3")
        options["time"] = parse_quantity(args.time, "s")
        if args.count is not None:
            options["count"] = mpf(args.count)
        if args.mass is not None:
            options["mass"] = parse_quantity(args.mass, "mp")
        if args.count is None and args.mass is None:
            options["count"] = mpf(1)
        if args.four_volume is not None:
            options["four_volume"] = mpf(args.four_volume)
    elif command == "brain":
        options["mass"] = parse_quantity(args.mass, "kg")
        options["size"] = parse_quantity(args.size, "cm")
        options["time"] = parse_quantity(args.time, "s")
    elif command == "gamma-moments":
        if args.central_charge is not None:
            options["central_charge"] = mpf(args.central_charge)
        for key in ("x0", "alpha", "beta"):
            value = getattr(args, key)
            if value is not None:
                options[key] = safe_fraction_conversion(value, key)
        options["compare"] = args.compare
    elif command == "additivity" and args.uncertainty is not None:
        options["uncertainty"] = mpf(args.uncertainty)
    elif command == "run-polynomial":
        options["n"] = args.n
    return options


def build_config(args: argparse.Namespace) -> RunConfig:
    operator = args.operator or COMMAND_DEFAULT_OPERATOR.get(args.command, "phi2")
    return RunConfig(
        command=args.command,
        operator=operator,
        n_max=args.n_max,
        digits=args.digits,
        cache_dir=args.cache_dir,
        output_format=OutputFormat(args.format),
        output=args.output,
        weights_file=args.weights,
        options=_command_options(args),
    )


def write_output(result: Dict[str, Any], config: RunConfig):
    """JSON (stdout or file) or the report rows as CSV/XLSX."""
    if config.output_format == OutputFormat.JSON:
        text = json.dumps(result, sort_keys=True, indent=2) + "\n"
        if config.output is None:
            sys.stdout.write(text)
        else:
            config.output.write_text(text, encoding="utf-8")
        return
    csv_text = export_rows(result.get("rows", []), config.output_format, config.output)
    if csv_text is not None:
        sys.stdout.write(csv_text)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
    except InvalidConfigError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return e.exit_code

    processor = MomentProcessor(config, debug=args.debug)
    result = processor.run()
    if "error" in result:
        return result["exit_code"]

    try:
        write_output(result, config)
    except InvalidConfigError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
