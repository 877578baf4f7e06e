"""
Monte Carlo experiments
=======================

Estimates rejection percentages of the tests on simulated data, one table
row per (model, parameters, n, test).

An experiment is a grid of cells (model, parameters, innovation, n). Every
cell is simulated ``reps`` times; each repetition runs all tests of the
experiment on the same series with one shared multiplier seed, through
:func:`cusumkit.analysis.stationarity.evaluate_presets`, exactly like a
single-series test would.

Randomness is keyed by position, never by execution order: repetition r of
cell c draws its data from the substream (seed, c, r, 0) and its
multipliers from (seed, c, r, 1). Results are therefore identical whatever
the number of worker processes.

Work is spread over a ``multiprocessing.Pool``; ``workers=1`` runs the same
worker function in-process, which is also the reference implementation used
by the tests.

Experiments can be described by an INI file::

    [experiment]
    name = table1
    reps = 1000
    replicates = 250
    level = 0.05
    seed = 1
    workers = 4

    [tests]
    presets = d:2, c:2, dc:2

    [model:DS]
    params = 4, 0.7; 2, 0.7
    n = 128
"""

import configparser
import logging
import multiprocessing as mp
import warnings
from contextlib import closing
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..analysis.combination import preset
from ..analysis.embeddings import Series
from ..analysis.stationarity import TestOptions, evaluate_presets
from ..generators.time_series_models import GeneratorSpec, generate
from ..generators.wavelet_processes import LSW_MODELS

logger = logging.getLogger(__name__)

COLUMNS = ["model", "params", "n", "test", "h", "rejection_pct", "stderr"]


@dataclass(frozen=True)
class ModelGrid:
    """One model over a grid of parameter vectors, innovations and lengths"""

    model: str
    params: Tuple[Tuple[float, ...], ...] = ((),)
    n: Tuple[int, ...] = (128,)
    innovations: Tuple[str, ...] = ("normal",)

    def cells(self) -> List[GeneratorSpec]:
        return [
            GeneratorSpec(model=self.model, params=params, innovation=innovation, n=n)
            for params in self.params
            for innovation in self.innovations
            for n in self.n
        ]


@dataclass(frozen=True)
class ExperimentSpec:
    """
    A Monte Carlo experiment.

    Parameters
    ----------
    name : str
        Base name of the output files
    models : tuple of ModelGrid
    tests : tuple of (preset, h)
    reps : int
        Monte Carlo repetitions per cell
    replicates : int
        Multiplier replicates M per test
    level : float
        Significance level, a test rejects when its p-value is below it
    seed : int
        Master seed
    workers : int
        Worker processes
    bandwidth : int, optional
        Fixed multiplier bandwidth b_n (estimated per series if None)
    psi : str
        Combination function of the combined tests
    output_dir : str
    """

    name: str = "experiment"
    models: Tuple[ModelGrid, ...] = ()
    tests: Tuple[Tuple[str, int], ...] = (("dc", 2),)
    reps: int = 1000
    replicates: int = 250
    level: float = 0.05
    seed: int = 0
    workers: int = 1
    bandwidth: Optional[int] = None
    psi: str = "fisher"
    output_dir: str = "."

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("Need at least one repetition, got reps=%d" % self.reps)
        if not 0 < self.level < 1:
            raise ValueError("Level must lie in (0, 1), got %r" % (self.level,))
        if self.workers < 1:
            raise ValueError("Need at least one worker, got %d" % self.workers)
        if not self.tests:
            raise ValueError("An experiment needs at least one test")
        for name, h in self.tests:
            preset(name, h)

    @property
    def h_max(self) -> int:
        return max(h for _, h in self.tests)

    def cells(self) -> List[GeneratorSpec]:
        return [cell for grid in self.models for cell in grid.cells()]

    def options(self, seed: int) -> TestOptions:
        return TestOptions(replicates=self.replicates, seed=seed, psi=self.psi, bandwidth=self.bandwidth)

    @classmethod
    def from_config(cls, path) -> "ExperimentSpec":
        """Reads an experiment description, see the module docstring"""
        parser = configparser.ConfigParser()
        try:
            found = parser.read(path)
        except configparser.Error as exc:
            raise ValueError("Malformed experiment configuration %s: %s" % (path, exc))
        if not found:
            raise ValueError("Cannot read experiment configuration %s" % path)
        return cls.from_parser(parser)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser) -> "ExperimentSpec":
        if not parser.has_section("experiment"):
            raise ValueError("Experiment configuration needs an [experiment] section")

        exp = parser["experiment"]
        kwargs = {
            "name": exp.get("name", "experiment"),
            "reps": exp.getint("reps", 1000),
            "replicates": exp.getint("replicates", 250),
            "level": exp.getfloat("level", 0.05),
            "seed": exp.getint("seed", 0),
            "workers": exp.getint("workers", 1),
            "psi": exp.get("psi", "fisher"),
            "output_dir": exp.get("output_dir", "."),
        }
        if exp.get("bandwidth", "").strip():
            kwargs["bandwidth"] = exp.getint("bandwidth")

        if parser.has_section("tests"):
            kwargs["tests"] = tuple(_parse_test(item) for item in _split(parser["tests"].get("presets", ""), ","))

        grids = []
        for section in parser.sections():
            if not section.startswith("model:"):
                continue
            values = parser[section]
            grids.append(
                ModelGrid(
                    model=section.split(":", 1)[1].strip(),
                    params=tuple(
                        tuple(float(p) for p in _split(vector, ",")) for vector in _split(values.get("params", ""), ";")
                    )
                    or ((),),
                    n=tuple(int(n) for n in _split(values.get("n", "128"), ",")),
                    innovations=tuple(_split(values.get("innovation", "normal"), ",")),
                )
            )

        if not grids:
            raise ValueError("Experiment configuration has no [model:<ID>] section")

        return cls(models=tuple(grids), **kwargs)


def _split(text, sep):
    return [item.strip() for item in text.split(sep) if item.strip()]


def _parse_test(item):
    name, _, h = item.partition(":")
    return name.strip(), int(h) if h.strip() else 2


@dataclass
class ExperimentResult:
    """Rejection table plus the messages of failed cells"""

    table: pd.DataFrame
    errors: Dict[str, str] = field(default_factory=dict)
    reps: int = 0
    level: float = 0.05


def substream_seed(master: int, *key: int) -> int:
    """64-bit seed of the substream ``key`` of the master seed"""
    return int(np.random.SeedSequence(master, spawn_key=key).generate_state(1, dtype=np.uint64)[0])


def series_length(cell: GeneratorSpec, h_max: int) -> Tuple[int, int]:
    """
    Simulated length and number of embedded points of a cell.

    Every test sees n points: n + h_max - 1 values are simulated. LSW models
    need a power-of-two length and are simulated with exactly n values, the
    tests then use n - h_max + 1 points.
    """
    if cell.model in LSW_MODELS:
        return cell.n, cell.n - h_max + 1
    return cell.n + h_max - 1, cell.n


def run_repetition(spec: ExperimentSpec, cell_index: int, cell: GeneratorSpec, r: int):
    """
    One repetition of one cell.

    Returns
    -------
    list of booleans (rejection of each test), in the order of spec.tests
    """
    length, n = series_length(cell, spec.h_max)
    data_spec = GeneratorSpec(
        model=cell.model,
        params=cell.params,
        innovation=cell.innovation,
        n=length,
        seed=substream_seed(spec.seed, cell_index, r, 0),
    )
    series = generate(data_spec)
    options = spec.options(substream_seed(spec.seed, cell_index, r, 1))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        reports = evaluate_presets(Series(series.values, name=cell.model), spec.tests, options, n=n)

    return [report.pvalue < spec.level for report in reports]


def init(*args):
    """Initializes the experiment shared by the workers"""
    global spec__
    global cells__
    spec__ = args[0]
    cells__ = args[1]


def worker(unit):
    """Runs repetition r of cell c; failures are returned, not raised"""
    c, r = unit
    try:
        return c, r, run_repetition(spec__, c, cells__[c], r), None
    except Exception as exc:  # noqa: BLE001 - a failing cell must not abort the table
        return c, r, None, "%s: %s" % (type(exc).__name__, exc)


def _cell_key(cell):
    return "%s|%s|%d" % (cell.model, cell.label, cell.n)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """
    Runs a Monte Carlo experiment.

    Parameters
    ----------
    spec : ExperimentSpec

    Returns
    -------
    ExperimentResult whose table has one row per cell and test with the
    rejection percentage and its binomial standard error
    100 sqrt(p (1 - p) / reps), both in percent. Cells in which any
    repetition failed are reported as NaN and their first error message is
    stored under "model|params|n".
    """
    cells = spec.cells()
    units = [(c, r) for c in range(len(cells)) for r in range(spec.reps)]
    nproc = min(spec.workers, max(len(units), 1))

    init(spec, cells)
    if nproc == 1:
        outcomes = [worker(unit) for unit in units]
    else:
        with closing(mp.Pool(processes=nproc, initializer=init, initargs=(spec, cells))) as p:
            outcomes = p.map(worker, units, chunksize=max(1, spec.reps // 4))

    counts = np.zeros((len(cells), len(spec.tests)), dtype=np.int64)
    errors = {}

    for c, r, rejections, error in outcomes:
        if error is not None:
            key = _cell_key(cells[c])
            if key not in errors:
                errors[key] = "repetition %d: %s" % (r, error)
                logger.error("Cell %s failed: %s", key, errors[key])
            continue
        counts[c] += np.asarray(rejections, dtype=np.int64)

    rows = []
    for c, cell in enumerate(cells):
        failed = _cell_key(cell) in errors
        for j, (name, h) in enumerate(spec.tests):
            p = counts[c, j] / spec.reps
            rows.append(
                {
                    "model": cell.model,
                    "params": cell.label,
                    "n": cell.n,
                    "test": name,
                    "h": h,
                    "rejection_pct": np.nan if failed else 100 * p,
                    "stderr": np.nan if failed else 100 * np.sqrt(p * (1 - p) / spec.reps),
                }
            )
        logger.info("Cell %d/%d (%s) done", c + 1, len(cells), _cell_key(cell))

    table = pd.DataFrame(rows, columns=COLUMNS)
    return ExperimentResult(table=table, errors=errors, reps=spec.reps, level=spec.level)
