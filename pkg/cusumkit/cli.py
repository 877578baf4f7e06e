"""
Command line interface
======================

::

    cusumkit test --input data.csv [--column 2] [--preset dc] [--h 2] [--json]
    cusumkit simulate --model N1 --n 128 --seed 1
    cusumkit experiment --config table1.ini
    cusumkit bandwidth --input data.csv

Exit codes: 0 the command ran (whatever the verdict), 2 bad arguments,
3 bad data, 4 internal error such as a contract violation.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

from . import __version__
from .analysis.embeddings import Series
from .analysis.multipliers import select_bandwidth
from .analysis.stationarity import TestOptions, test_stationarity
from .exceptions import ContractViolation, DataError
from .experiments.monte_carlo import ExperimentSpec, run_experiment
from .experiments.tables import export_table, format_table
from .generators.time_series_models import MODELS, GeneratorSpec, generate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _is_missing(cell):
    return cell is None or (isinstance(cell, float) and np.isnan(cell)) or not str(cell).strip()


def read_series(path, column=1, header=False) -> Series:
    """
    Reads one column of a text/CSV file as a series.

    Parameters
    ----------
    path : str
        File name, "-" for standard input
    column : int
        1-based column index
    header : bool
        Skip the first line

    Empty lines are skipped. A missing, non-numeric or non-finite entry
    (including spellings such as ``NA`` or ``nan``) is a :class:`DataError`
    naming its line.
    """
    if column < 1:
        raise ValueError("Columns are numbered from 1, got %d" % column)

    source = sys.stdin if path == "-" else path
    try:
        frame = pd.read_csv(
            source,
            header=None,
            dtype=str,
            skip_blank_lines=False,
            skipinitialspace=True,
            keep_default_na=False,
            na_filter=False,
        )
    except pd.errors.EmptyDataError:
        raise DataError("Input %s is empty" % path)
    except pd.errors.ParserError as exc:
        raise DataError("Cannot parse %s: %s" % (path, exc))
    except OSError as exc:
        raise DataError("Cannot read %s: %s" % (path, exc))

    if column > frame.shape[1]:
        raise ValueError("Column %d requested but the input has %d column(s)" % (column, frame.shape[1]))

    values = []
    for index, row in enumerate(frame.itertuples(index=False, name=None)):
        line = index + 1
        if header and line == 1:
            continue
        if all(_is_missing(cell) for cell in row):
            continue

        cell = row[column - 1]
        if _is_missing(cell):
            raise DataError("Line %d: no value in column %d" % (line, column))
        try:
            value = float(cell)
        except (TypeError, ValueError):
            raise DataError("Line %d: non-numeric value %r in column %d" % (line, cell, column))
        if not np.isfinite(value):
            raise DataError("Line %d: non-finite value %r in column %d" % (line, cell, column))

        values.append(value)

    if not values:
        raise DataError("Input %s contains no values" % path)

    return Series(np.array(values), name=str(path))


def _add_input_args(parser):
    parser.add_argument("--input", required=True, metavar="PATH", help="text/CSV file, '-' for stdin")
    parser.add_argument("--column", type=int, default=1, metavar="INT", help="1-based column (default 1)")
    parser.add_argument("--header", action="store_true", help="first line is a header")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cusumkit", description="CUSUM tests of stationarity for time series")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    defaults = TestOptions()

    test = sub.add_parser("test", help="test one series for stationarity")
    _add_input_args(test)
    test.add_argument("--preset", default=defaults.preset, help="d, c, dh, dc, dcp, m, v, a, va, mva or c<lag>")
    test.add_argument("--h", type=int, default=defaults.h, help="embedding dimension, small values (2-4) advised")
    test.add_argument("--replicates", type=int, default=defaults.replicates, metavar="M")
    test.add_argument("--seed", type=int, default=None, metavar="U64")
    test.add_argument("--psi", choices=("fisher", "stouffer"), default=defaults.psi)
    test.add_argument("--bandwidth", type=int, default=None, metavar="B", help="fixed b_n (default: estimated)")
    test.add_argument("--derivative-bandwidth", type=float, default=None, metavar="DELTA")
    test.add_argument("--strict-ties", action="store_true", help="reject tied data")
    test.add_argument("--json", action="store_true", help="machine readable output")
    test.add_argument("--output", metavar="PATH", help="write the report here instead of stdout")

    simulate = sub.add_parser("simulate", help="simulate a series, one value per line")
    simulate.add_argument("--model", required=True, choices=MODELS)
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=0, metavar="U64")
    simulate.add_argument("--params", default="", help="comma-separated model parameters")
    simulate.add_argument("--innovation", choices=("normal", "t4"), default="normal")

    experiment = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    experiment.add_argument("--config", required=True, metavar="PATH")
    experiment.add_argument("--workers", type=int, default=None)
    experiment.add_argument("--output-dir", default=None, metavar="DIR")

    bandwidth = sub.add_parser("bandwidth", help="show the estimated multiplier bandwidth")
    _add_input_args(bandwidth)
    bandwidth.add_argument("--json", action="store_true")

    return parser


def cmd_test(args) -> int:
    series = read_series(args.input, args.column, args.header)
    options = TestOptions(
        preset=args.preset,
        h=args.h,
        replicates=args.replicates,
        seed=args.seed,
        psi=args.psi,
        bandwidth=args.bandwidth,
        strict_ties=args.strict_ties,
        derivative_bandwidth=args.derivative_bandwidth,
    )
    report = test_stationarity(series, options)
    text = report.to_json() if args.json else report.render()

    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = tuple(float(p) for p in args.params.split(",") if p.strip())
    spec = GeneratorSpec(model=args.model, params=params, innovation=args.innovation, n=args.n, seed=args.seed)
    series = generate(spec)
    sys.stdout.write("".join("%.17g\n" % value for value in series.values))
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_config(args.config)
    if args.workers is not None:
        spec = replace(spec, workers=args.workers)
    if args.output_dir is not None:
        spec = replace(spec, output_dir=args.output_dir)

    result = run_experiment(spec)
    csv_path, json_path = export_table(result, spec.output_dir, spec.name)

    print(format_table(result.table))
    for key, message in result.errors.items():
        print("failed cell %s: %s" % (key, message))
    print("wrote %s, %s" % (csv_path, json_path))
    return EXIT_OK


def cmd_bandwidth(args) -> int:
    series = read_series(args.input, args.column, args.header)
    choice = select_bandwidth(series)
    info = choice.to_dict()

    if args.json:
        print(json.dumps(info, indent=2))
    else:
        for key, value in info.items():
            print("%s: %s" % (key, value))
        if choice.fallback:
            print("constant series: no dependence could be estimated, falling back to b_n = 1")
    return EXIT_OK


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "experiment": cmd_experiment, "bandwidth": cmd_bandwidth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    logging.captureWarnings(True)

    try:
        return COMMANDS[args.command](args)
    except DataError as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except ContractViolation as exc:
        logger.error("Contract violation: %s", exc)
        return EXIT_INTERNAL
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except Exception:  # noqa: BLE001
        logger.exception("Internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
