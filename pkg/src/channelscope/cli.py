"""Command-line front end.

Exit codes: 0 success, 2 bad arguments or spec document, 3 numerical
failure, 4 invalid channel parameters, 5 certification failure. Results go
to ``--out`` (written atomically) or, with ``--stdout``, to standard
output; diagnostics go to standard error.
"""

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
from scipy import optimize

from . import zoo
from .certify import SCHEMA_VERSION, run_certification
from .config import DEFAULT_TOLERANCES
from .errors import ChannelError, NumericalFailure, ParameterError, SpecError
from .representations import intermediate_map, transfer_to_choi
from .spec_io import Grid, load_spec
from .witness import full_scan, hcla_measure

log = logging.getLogger("channelscope")

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_PARAMS, EXIT_CERTIFY = 0, 2, 3, 4, 5
MAX_FAILURE_FRACTION = 0.01


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- output


def fmt(x):
    return f"{float(x):.12g}"


def csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(x) for x in row) + "\n")
    return buf.getvalue()


def json_text(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, text, default_name):
    if args.stdout:
        sys.stdout.write(text)
    if args.out or not args.stdout:
        path = args.out or default_name
        atomic_write(path, text)
        log.info("wrote %s", path)


# ---------------------------------------------------------------- argument helpers


def parse_tolerances(items):
    overrides = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--tol expects name=value, got {item!r}", EXIT_PARSE)
        try:
            overrides[name.strip()] = float(value)
        except ValueError:
            raise CliError(f"--tol {name}: not a number: {value!r}", EXIT_PARSE) from None
    try:
        return DEFAULT_TOLERANCES.with_overrides(**overrides)
    except KeyError as exc:
        raise CliError(str(exc.args[0]), EXIT_PARSE) from None


def seed_arg(text):
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return seed


def grid_arg(text):
    try:
        return Grid.parse(text)
    except SpecError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def range_arg(text):
    parts = text.split(":")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise argparse.ArgumentTypeError(f"range must look like lo:hi:points, got {text!r}") from None
    if len(parts) != 3 or n < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return lo, hi, n


def load_spec_arg(args, required=True):
    if args.spec is None:
        if required:
            raise CliError("--spec is required for this command", EXIT_PARSE)
        return None
    spec = load_spec(args.spec)
    if args.grid is not None:
        spec = spec.with_grid(args.grid)
    return spec


def quasi_params(args):
    return zoo.QuasiEnmParams(args.m, args.n, args.nu)


def grid_times(args, default):
    return (args.grid or default).times


# ---------------------------------------------------------------- commands


def cmd_scan(args, tol):
    spec = load_spec_arg(args)
    dyn = spec.build()
    series = full_scan(dyn, spec.grid.times, seed=args.seed, tol=tol)
    frac = series.metadata["failure_fraction"]
    for t, msg in series.failures:
        log.warning("t=%s: %s", fmt(t), msg)
    if frac > MAX_FAILURE_FRACTION:
        raise CliError(f"numerical failure at {frac:.1%} of grid points", EXIT_NUMERIC)
    k = series.rates.shape[1]
    header = ["t"] + [f"gamma_{j + 1}" for j in range(k)]
    header += ["choi_min_eig", "td_deriv_max", "trace_D", "hmax_DDT"]
    rows = np.column_stack([series.grid, series.rates, series.choi_min_eig,
                            series.td_derivative_max, series.trace_D, series.hmax_DDT])
    emit(args, csv_text(header, rows), "scan.csv")


def cmd_fig1(args, tol):
    params = quasi_params(args)
    t = grid_times(args, Grid(0.0, 5.0, 500))
    g1, g2 = zoo.quasi_enm_rates(params, t)
    # spot check the closed form against rates extracted from the channel
    dyn = zoo.quasi_enm_dynamics(params)
    for s in np.linspace(t[0], t[-1], 5):
        extracted = np.asarray(dyn.rates(s))
        exact = np.asarray(zoo.quasi_enm_rates(params, s))
        if np.max(np.abs(extracted - exact)) > 1e-6:
            raise CliError(f"extracted rates disagree with closed form at t={s}", EXIT_NUMERIC)
    emit(args, csv_text(["t", "gamma_1", "gamma_2"], np.column_stack([t, g1, g2])), "fig1.csv")


def cmd_fig2(args, tol):
    lo, hi, n = args.m_range
    ms = np.linspace(lo, hi, n)
    if np.any(ms <= args.nu):
        raise CliError(f"every m must exceed nu={args.nu}", EXIT_PARAMS)
    params = [zoo.QuasiEnmParams(m, args.n, args.nu) for m in ms]
    xi = np.array([zoo.hcla_closed_form(p) for p in params])
    spots = sorted({0, n // 2, n - 1})
    for i in spots:
        quad = hcla_by_quadrature(params[i], tol)
        if abs(quad - xi[i]) > tol.quadrature * max(abs(xi[i]), 1e-300):
            raise CliError(f"quadrature check failed at m={ms[i]}: {quad} vs {xi[i]}",
                           EXIT_NUMERIC)
    emit(args, csv_text(["m", "xi_hcla"], np.column_stack([ms, xi])), "fig2.csv")


def hcla_by_quadrature(params, tol):
    return hcla_measure(lambda t: zoo.quasi_enm_rates(params, t), zoo.hcla_cutoff(params), tol=tol)


def cmd_certify(args, tol):
    spec = load_spec_arg(args, required=False)
    report = run_certification(seed=args.seed, spec=spec, tol=tol)
    emit(args, json_text(report), "certify.json")
    if not report["passed"]:
        raise CliError("failing properties: " + ", ".join(report["failed"]), EXIT_CERTIFY)


def cmd_choi_spectrum(args, tol):
    spec = load_spec_arg(args)
    dyn = spec.build()
    rows, failures = [], 0
    d2 = dyn.dim**2
    for t in spec.grid.times:
        try:
            F = dyn(t)
            if args.eps:
                F = intermediate_map(dyn(t + args.eps), F, max_condition=tol.condition)
            rows.append([t, *transfer_to_choi(F).eigenvalues()])
        except ChannelError as exc:
            failures += 1
            log.warning("t=%s: %s", fmt(t), exc)
            rows.append([t] + [np.nan] * d2)
    if failures > MAX_FAILURE_FRACTION * len(rows):
        raise CliError(f"numerical failure at {failures} grid points", EXIT_NUMERIC)
    header = ["t"] + [f"eig_{j + 1}" for j in range(d2)]
    emit(args, csv_text(header, rows), "choi_spectrum.csv")


def cmd_tstar(args, tol):
    params = quasi_params(args)
    ts = zoo.t_star(params)

    def g1(t):
        return float(zoo.quasi_enm_rates(params, t)[0])

    root = optimize.bisect(g1, 0.0, 10.0 * ts + 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    doc = {"schema": SCHEMA_VERSION, "m": params.m, "n": params.n, "nu": params.nu,
           "t_star": ts, "t_star_bisection": root, "difference": abs(root - ts)}
    emit(args, json_text(doc), "tstar.json")
    if abs(root - ts) > 1e-8:
        raise CliError("bisection disagrees with the closed form", EXIT_NUMERIC)


def cmd_hcla(args, tol):
    spec = load_spec_arg(args, required=False)
    if spec is not None and spec.family != "quasi_enm_gad":
        dyn = spec.build()

        def rates(t):
            exact = dyn.exact_rates(t)
            return np.asarray(exact if exact is not None else dyn.rates(t), dtype=float)

        value = hcla_measure(rates, spec.grid.t_max, t_min=spec.grid.t_min, tol=tol)
        doc = {"schema": SCHEMA_VERSION, "family": spec.family, "t_min": spec.grid.t_min,
               "t_max": spec.grid.t_max, "hcla_quadrature": value}
    else:
        params = zoo.QuasiEnmParams(**spec.params) if spec is not None else quasi_params(args)
        closed = zoo.hcla_closed_form(params)
        quad = hcla_by_quadrature(params, tol)
        rel = abs(quad - closed) / closed
        doc = {"schema": SCHEMA_VERSION, "family": "quasi_enm_gad", "m": params.m,
               "n": params.n, "nu": params.nu, "hcla_closed_form": closed,
               "hcla_quadrature": quad, "relative_difference": rel,
               "cutoff": zoo.hcla_cutoff(params)}
        if rel > tol.quadrature:
            emit(args, json_text(doc), "hcla.json")
            raise CliError("quadrature disagrees with the closed form", EXIT_NUMERIC)
    emit(args, json_text(doc), "hcla.json")


COMMANDS = {
    "scan": (cmd_scan, "rates and divisibility diagnostics of a spec on a grid (CSV)"),
    "fig1": (cmd_fig1, "quasi-ENM rates gamma_1, gamma_2 against t (CSV)"),
    "fig2": (cmd_fig2, "HCLA measure of the quasi-ENM family against m (CSV)"),
    "certify": (cmd_certify, "run the property suites (JSON report)"),
    "choi-spectrum": (cmd_choi_spectrum, "Choi eigenvalues along a trajectory (CSV)"),
    "tstar": (cmd_tstar, "time after which gamma_1 stays negative (JSON)"),
    "hcla": (cmd_hcla, "HCLA measure by closed form and quadrature (JSON)"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="channel spec document (.json, .yaml, .yml)")
    common.add_argument("--out", help="output path (default: <command>.csv/.json)")
    common.add_argument("--grid", type=grid_arg, help="time grid tmin:tmax:points")
    common.add_argument("--seed", type=seed_arg, default=0, help="seed for random ensembles")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="override a tolerance (repeatable)")
    common.add_argument("--stdout", action="store_true", help="write results to stdout")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="channelscope", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("fig1", "fig2", "tstar", "hcla"):
            p.add_argument("--m", type=float, default=3.0)
            p.add_argument("--n", type=float, default=2.0)
            p.add_argument("--nu", type=float, default=1.0)
        if name == "fig2":
            p.add_argument("--m-range", type=range_arg, default=(1.5, 10.0, 50),
                           help="lo:hi:points (default 1.5:10:50)")
        if name == "choi-spectrum":
            p.add_argument("--eps", type=float, default=0.0,
                           help="use the intermediate map F(t+eps)F(t)^-1 instead of F(t)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="channelscope: %(message)s", stream=sys.stderr)
    handler = COMMANDS[args.command][0]
    try:
        tol = parse_tolerances(args.tol)
        handler(args, tol)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except SpecError as exc:
        log.error("spec error: %s", exc)
        return EXIT_PARSE
    except ParameterError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_PARAMS
    except (NumericalFailure, ChannelError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
