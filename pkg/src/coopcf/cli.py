"""Command-line entry point: ``coopcf <verb> [options]``.

Every verb writes a CSV (to ``--out`` or stdout) whose first line is a
``#`` comment carrying scenario, seed and budget, followed by the header
and one row per sweep point. With ``--out`` a JSON sidecar holding the full
configuration and summary is written next to it. The exit code is 1 on a
parameter error, 2 on a usage error (from argparse) and 3 when
an invariant check fails.
"""
import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from . import kernels, scenarios
from .errors import CoopCFError
from .search import SearchBudget

log = logging.getLogger("coopcf")

VERBS = ("example1", "example2", "example3", "example4", "dmt", "linksim", "outage")


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def parse_sweep(text):
    """``start:stop:num`` or a comma list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            vals = np.linspace(float(a), float(b), int(n))
        else:
            vals = np.array(_floats(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}") from exc
    if vals.size < 2:
        raise argparse.ArgumentTypeError("a sweep needs at least two points")
    return vals


def _sweep(values, default):
    return default if values is None else values


def build_parser():
    parser = argparse.ArgumentParser(prog="coopcf", description=__doc__.splitlines()[0])
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("--snr-db", type=_floats, default=None,
                        help="transmit SNR P in dB; comma list where a verb sweeps it")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget", type=SearchBudget.parse, default=SearchBudget(),
                        help="search budget coeff:grid:iters (default %(default)s)")
    parser.add_argument("--out", default=None, help="CSV path (default stdout)")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--sweep", type=parse_sweep, default=None,
                        help="sweep values as start:stop:num or a comma list")
    parser.add_argument("--L", type=int, default=None, help="number of transmitters")
    parser.add_argument("--mc-samples", type=int, default=0,
                        help="Monte Carlo samples per point for the outage verb")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _first(values, default):
    return default if not values else values[0]


def run(args):
    """Dispatch a parsed namespace; returns ``(columns, rows, summary, config)``."""
    b, w = args.budget, args.workers
    cfg = {"scenario": args.verb, "seed": args.seed, "budget": str(b), "backend": kernels.BACKEND}
    if args.verb == "example1":
        P_db = _first(args.snr_db, 10.0)
        g2 = _sweep(args.sweep, None)
        cols, rows, summ = scenarios.run_example1(P_db, g2, b, w)
        cfg.update(P_db=P_db)
    elif args.verb == "example2":
        P_db = _first(args.snr_db, 10.0)
        trials = args.trials or 500
        arcs = _sweep(args.sweep, None)
        L = 3 if args.L is None else args.L
        cols, rows, summ = scenarios.run_example2(L, P_db, 4.0, arcs, trials, args.seed, b, w)
        cfg.update(P_db=P_db, trials=trials, L=L)
    elif args.verb in ("example3", "example4"):
        fn = scenarios.run_example3 if args.verb == "example3" else scenarios.run_example4
        cols, rows, summ = fn(args.snr_db, _sweep(args.sweep, None), b, w)
        cfg.update(P_db=args.snr_db or [10.0])
    elif args.verb == "dmt":
        L_list = (2, 5) if args.L is None else (args.L,)
        cols, rows, summ = scenarios.run_dmt_curves(L_list)
        cfg.update(L=list(L_list))
    elif args.verb == "linksim":
        P_db = _first(args.snr_db, 30.0)
        trials = args.trials or 200
        noise = _sweep(args.sweep, (0.0, 3.0, 6.0))
        cols, rows, summ = scenarios.run_linksim(P_db, tuple(noise), trials=trials,
                                                 seed=args.seed, workers=w)
        cfg.update(P_db=P_db, trials=trials, noise_db=list(map(float, noise)))
    else:
        snr = args.snr_db or [10, 15, 20, 25, 30]
        rs = _sweep(args.sweep, (0.0, 0.5))
        L = 2 if args.L is None else args.L
        cols, rows, summ = scenarios.run_outage(L, tuple(rs), tuple(snr),
                                                mc_samples=args.mc_samples, seed=args.seed,
                                                workers=w)
        cfg.update(snr_db=list(snr), L=L, mc_samples=args.mc_samples)
    return cols, rows, summ, cfg


def format_csv(columns, rows, config):
    buf = io.StringIO()
    buf.write(f"# scenario={config['scenario']} seed={config['seed']} budget={config['budget']}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cols, rows, summ, cfg = run(args)
    except CoopCFError as exc:
        print(f"coopcf: error: {exc}", file=sys.stderr)
        return 1
    text = format_csv(cols, rows, cfg)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        with open(args.out + ".json", "w") as fh:
            json.dump({"config": cfg, "columns": cols, "summary": summ}, fh, indent=2,
                      default=_jsonable)
    else:
        sys.stdout.write(text)
    for v in summ["violations"]:
        log.error("invariant violated: %s", v)
    return 3 if summ["violations"] else 0


if __name__ == "__main__":
    sys.exit(main())
