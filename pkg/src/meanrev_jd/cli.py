"""Command-line interface: ``meanrev-jd <command> [options]``.

Commands: stats, fit, esscher, price, simulate. Each prints one JSON object
with the keys command, inputs, results, diagnostics and version. Warnings and
progress go to standard error. Exit status: 0 success, 2 input error, 3
numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import load_numerics
from .data import describe, ingest_csv, to_logreturns, write_price_csv
from .density import DensityConfig, mle_fit
from .ecf import FrequencyGrid, gmm_fit
from .errors import GridError, InputError, NumericalError
from .esscher import MarketParams, solve_theta
from .model import MODELS, PARAM_NAMES, SeriesGrid, params_from_dict
from .moments import empirical_moments, mom_fit
from .pricing import OptionSpec, PricingGrid, price_call_fft, price_call_quadrature, select_damping
from .simulate import SimConfig, mc_price_call, simulate_logprices, simulate_prices, write_paths_csv

log = logging.getLogger("meanrev_jd")


def _jsonable(obj):
    """Convert numpy scalars, arrays, tuples and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _pairs(items, what: str) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise InputError(f"{what} must look like name=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise InputError(f"{what} {key!r}: not a number: {val!r}") from None
    return out


def _load_params(args):
    values = {}
    if args.params_json:
        try:
            doc = json.loads(Path(args.params_json).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read parameter file: {exc}") from None
        if isinstance(doc, dict) and "results" in doc:
            doc = doc["results"].get("params", doc["results"])
        if not isinstance(doc, dict):
            raise InputError("parameter file must hold a JSON object")
        values.update({k: v for k, v in doc.items() if k in PARAM_NAMES[args.model]})
    values.update(_pairs(args.param, "--param"))
    return params_from_dict(args.model, values)


def _load_series(args, numerics):
    prices = ingest_csv(args.csv, args.date_col, args.price_col, args.allow_unsorted)
    return prices, to_logreturns(prices, numerics["delta"])


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_stats(args, numerics):
    prices, x = _load_series(args, numerics)
    m = empirical_moments(x, 4)
    results = {"describe": describe(x), "raw_moments": [m.m1, m.m2, m.m3, m.m4], "n_prices": len(prices)}
    return results, {}


def cmd_fit(args, numerics):
    _, x = _load_series(args, numerics)
    fixed = _pairs(args.fix, "--fix")
    init = None
    if args.init:
        from .calibration import default_init

        base = default_init(args.model, x).to_dict()
        base.update(_pairs(args.init, "--init"))
        init = params_from_dict(args.model, base)
    if args.method == "mom":
        res = mom_fit(x, args.model, init=init, fixed=fixed)
    elif args.method == "mle":
        cfg = DensityConfig(nodes=numerics["density_nodes"], mode=args.density_mode,
                            tail_tol=numerics["density_tail_tol"])
        res = mle_fit(x, args.model, init=init, fixed=fixed, cfg=cfg, std_errors=not args.no_std_errors)
    else:
        L = args.L or numerics["gmm_l"]
        fg = FrequencyGrid(args.eta, L) if args.eta else FrequencyGrid.for_data(x, L, numerics["gmm_eta_scale"])
        res = gmm_fit(x, args.model, fg=fg, init=init, fixed=fixed, literal_weight=args.literal_weight)
    d = res.to_dict()
    diag = d.pop("diagnostics")
    return d, diag


def _market(args):
    return MarketParams(args.r, args.T, args.S0)


def cmd_esscher(args, numerics):
    p = _load_params(args)
    sol = solve_theta(p, _market(args), xtol=numerics["theta_xtol"], residual_tol=numerics["residual_tol"],
                      quad_tol=numerics["cf_tol"])
    results = {"theta_gs": sol.theta_gs, "residual": sol.residual, "bracket": sol.bracket,
               "iterations": sol.iterations}
    return results, sol.diagnostics


def cmd_price(args, numerics):
    p = _load_params(args)
    mkt = _market(args)
    sol = solve_theta(p, mkt, xtol=numerics["theta_xtol"], residual_tol=numerics["residual_tol"],
                      quad_tol=numerics["cf_tol"])
    theta = sol.theta_gs
    R = args.R if args.R is not None else select_damping(p, theta, numerics["damping"])
    strikes = [float(k) for k in args.K]
    diag = {"theta_gs": theta, "damping": R}
    if args.method == "mc":
        paths = args.paths or numerics["mc_paths"]
        cfg = SimConfig(paths=paths, seed=args.seed, chunk=numerics["mc_chunk"], tilt=args.tilt)
        price, se, mdiag = mc_price_call(p, mkt, strikes, cfg, theta=theta)
        rows = [{"K": k, "price": float(v), "std_error": float(s)} for k, v, s in zip(strikes, price, se)]
        diag.update(mdiag)
    elif args.method == "fft":
        rows = []
        grid = PricingGrid(numerics["fft_m"], numerics["fft_n"])
        for k in strikes:
            spots, prices, info = price_call_fft(p, mkt, k, grid, R=R, theta=theta,
                                                 agreement=numerics["fft_agreement"])
            i = int(np.argmin(np.abs(np.log(spots) - mkt.x0)))
            rows.append({"K": k, "price": float(prices[i]), "spot_node": float(spots[i])})
            diag.setdefault("fft", []).append(info)
    else:
        rows = [{"K": k, "price": price_call_quadrature(p, mkt, OptionSpec(k, mkt.T), R=R, theta=theta,
                                                         tol=numerics["quad_tol"],
                                                         tail_tol=numerics["quad_tail_tol"])}
                for k in strikes]
    return {"method": args.method, "prices": rows}, diag


def cmd_simulate(args, numerics):
    p = _load_params(args)
    grid = SeriesGrid(numerics["delta"], args.n)
    times = grid.delta * np.arange(1, args.n + 2)
    if args.paths == 1:
        prices = simulate_prices(p, grid, args.S0, seed=args.seed)
        results = {"n_prices": int(prices.size), "first": float(prices[0]), "last": float(prices[-1])}
        if args.csv_out:
            write_price_csv(args.csv_out, times.tolist(), prices)
            results["csv"] = str(args.csv_out)
        x = to_logreturns(prices, grid.delta)
        results["describe"] = describe(x)
    else:
        res = simulate_logprices(p, times, SimConfig(paths=args.paths, seed=args.seed,
                                                     chunk=numerics["mc_chunk"]))
        results = {"paths": args.paths, "n_times": int(times.size),
                   "terminal_mean": float(res.values[:, -1].mean())}
        if args.csv_out:
            write_paths_csv(args.csv_out, times, res.values)
            results["csv"] = str(args.csv_out)
    return results, {}


COMMANDS = {"stats": cmd_stats, "fit": cmd_fit, "esscher": cmd_esscher, "price": cmd_price,
            "simulate": cmd_simulate}


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [numerics] section (default: $MEANREV_JD_CONFIG)")
    common.add_argument("--numeric", action="append", metavar="KEY=VALUE",
                        help="override one [numerics] setting; repeatable")
    common.add_argument("--out", help="also write the JSON document to this file")
    common.add_argument("--seed", type=int, default=0, help="root seed for simulation (default 0)")
    common.add_argument("--threads", type=int, default=None, help="threads for the numba kernels")
    common.add_argument("--delta", type=float, default=None, help="time step in years (default 1/252)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--csv", required=True, help="price CSV with a header row")
    data.add_argument("--date-col", default="date")
    data.add_argument("--price-col", default="price")
    data.add_argument("--allow-unsorted", action="store_true", help="sort rows by timestamp instead of failing")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", choices=MODELS, required=True)
    model.add_argument("--param", action="append", metavar="NAME=VALUE", help="model parameter; repeatable")
    model.add_argument("--params-json", help="JSON file with parameters (a fit output works)")

    market = argparse.ArgumentParser(add_help=False)
    market.add_argument("--r", type=float, required=True, help="risk-free rate")
    market.add_argument("--T", type=float, required=True, help="maturity in years")
    market.add_argument("--S0", type=float, required=True, help="spot price")

    parser = argparse.ArgumentParser(prog="meanrev-jd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("stats", parents=[common, data], help="descriptive statistics of log-returns")

    fit = sub.add_parser("fit", parents=[common, data], help="calibrate a model to a price series")
    fit.add_argument("--model", choices=MODELS, required=True)
    fit.add_argument("--method", choices=("mom", "mle", "ecf"), required=True)
    fit.add_argument("--fix", action="append", metavar="NAME=VALUE", help="hold a parameter fixed; repeatable")
    fit.add_argument("--init", action="append", metavar="NAME=VALUE", help="starting value; repeatable")
    fit.add_argument("--eta", type=float, help="ECF grid half-width (default scaled to the data)")
    fit.add_argument("--L", type=int, help="ECF grid size")
    fit.add_argument("--literal-weight", action="store_true", help="weight the ECF objective by Omega itself")
    fit.add_argument("--density-mode", choices=("normalized", "paper-literal"), default="normalized")
    fit.add_argument("--no-std-errors", action="store_true", help="skip the Hessian for MLE")

    sub.add_parser("esscher", parents=[common, model, market], help="solve for the Esscher parameter")

    price = sub.add_parser("price", parents=[common, model, market], help="European call prices")
    price.add_argument("--K", type=float, nargs="+", required=True, help="strike(s)")
    how = price.add_mutually_exclusive_group()
    how.add_argument("--quad", dest="method", action="store_const", const="quad", help="quadrature (default)")
    how.add_argument("--fft", dest="method", action="store_const", const="fft", help="FFT across spots")
    how.add_argument("--mc", dest="method", action="store_const", const="mc", help="Monte Carlo")
    price.set_defaults(method="quad")
    price.add_argument("--R", type=float, help="damping factor (default from config, clipped for Kou)")
    price.add_argument("--paths", type=int, help="Monte-Carlo paths")
    price.add_argument("--tilt", choices=("weights", "direct"), default="direct",
                       help="Monte-Carlo change of measure")

    sim = sub.add_parser("simulate", parents=[common, model], help="simulate prices under the historic measure")
    sim.add_argument("--n", type=int, required=True, help="number of steps")
    sim.add_argument("--S0", type=float, default=1.0, help="initial price")
    sim.add_argument("--paths", type=int, default=1, help="paths (more than one writes log-price paths)")
    sim.add_argument("--csv-out", help="write the simulated series here")
    return parser


def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("verbose",)}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        overrides = _pairs(args.numeric, "--numeric")
        if args.delta is not None:
            overrides["delta"] = args.delta
        numerics = load_numerics(args.config, overrides)
        if args.threads:
            _kernels.set_threads(args.threads)
        log.info("running %s with backend %s", args.command, _kernels.BACKEND)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            results, diag = COMMANDS[args.command](args, numerics)
    except InputError as exc:
        print(f"meanrev-jd: input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        extra = f" (suggestion: {exc.suggestion})" if isinstance(exc, GridError) and exc.suggestion else ""
        print(f"meanrev-jd: numerical failure: {exc}{extra}", file=sys.stderr)
        return 3
    diag = dict(diag)
    diag["backend"] = _kernels.BACKEND
    inputs = _echo(args)
    inputs["numerics"] = numerics
    doc = _jsonable({"command": args.command, "inputs": inputs, "results": results,
                     "diagnostics": diag, "version": __version__})
    text = json.dumps(doc, indent=2, allow_nan=False)
    print(text)
    if args.out:
        try:
            Path(args.out).write_text(text + "\n")
        except OSError as exc:
            print(f"meanrev-jd: input error: cannot write {args.out}: {exc}", file=sys.stderr)
            return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
