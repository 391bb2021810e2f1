"""Command-line entry point: ``coxradar <subcommand> [options]``.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.
Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiment as ex
from .cityfit import NonIdentifiableError
from .cox import write_realization_csv
from .interference import QuadratureError
from .montecarlo import Scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config (overlays the defaults)")
    p.add_argument("--seed", type=int, help="root seed (non-negative)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--method", choices=ex.METHODS, help="analytic, mc or both")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coxradar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="write one Palm-conditioned realization as CSV")
    _common(p)
    p.add_argument("--index", type=int, default=0, help="realization index")

    p = sub.add_parser("detect", help="detection-probability sweep (analytic by default)")
    _common(p)

    p = sub.add_parser("montecarlo", help="Monte Carlo detection sweep or power densities")
    _common(p)
    p.add_argument("--pdf", action="store_true",
                   help="write received-power densities instead of a p_D sweep")

    p = sub.add_parser("interferers", help="mean interferer counts along the sweep")
    _common(p)

    for name, helptext in (("fit", "fit street-model parameters for city folders"),
                           ("hourly", "fit cities and compute hourly detection probability")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("cities", nargs="+", type=Path,
                       help="folders with street_curve.csv, congestion.csv, city_meta.csv")
    return ap


def _config(args, **force):
    over = {"seed": args.seed, "method": args.method, **force}
    return ex.load_config(args.config, **over)


def _sample(args) -> list[Path]:
    cfg = _config(args)
    scn: Scenario = ex.scenario(cfg)
    net = scn.realize(int(cfg["seed"]), args.index)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{cfg.get('name', 'curve')}_realization_{args.index}.csv"
    write_realization_csv(net, path)
    return [path]


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ex.ConfigError("--threads must be >= 1")
        if args.command == "sample":
            paths = _sample(args)
        elif args.command == "detect":
            paths = ex.run_experiment(_config(args), args.out, threads=args.threads)
        elif args.command == "montecarlo":
            if args.pdf:
                path, cross = ex.run_pdf(_config(args, method=ex.MC), args.out,
                                         threads=args.threads)
                print(json.dumps({"pdf": str(path), "crossing_dbm": cross}))
                return EXIT_OK
            paths = ex.run_experiment(_config(args, method=args.method or ex.MC), args.out,
                                      threads=args.threads)
        elif args.command == "interferers":
            paths = [ex.run_interferers(_config(args), args.out, threads=args.threads)]
        else:
            paths = ex.run_cityfit(_config(args), args.cities, args.out, threads=args.threads,
                                   hourly=args.command == "hourly")
    except (QuadratureError, NonIdentifiableError, ArithmeticError) as e:
        return _fail(EXIT_NUMERIC, "numerical", e)
    except (ValueError, OSError) as e:
        return _fail(EXIT_CONFIG, "config", e)
    for p in paths:
        print(p)
    return EXIT_OK


def _fail(code: int, kind: str, err: Exception) -> int:
    print(json.dumps({"error": kind, "type": type(err).__name__, "message": str(err)}),
          file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
