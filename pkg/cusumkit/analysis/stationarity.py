"""
Testing a series for stationarity
=================================

One-call entry points tying the pieces together:

>>> report = test_stationarity(x, preset="dc", h=2, replicates=1000, seed=1)
>>> report.pvalue

For a preset the steps are: check the data, choose the multiplier bandwidth,
draw ONE multiplier set, evaluate every component of the preset with it and
combine the component p-values. :func:`evaluate_presets` runs several
presets on the same series, reusing multiplier sets and components between
them; the Monte Carlo harness goes through it so that simulated and single
series tests count rejections the same way.
"""

import logging
import warnings
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import kurtosis

from ..exceptions import DataError
from .combination import CombinationSpec, Preset, TestReport, combine, preset
from .embeddings import Series, check_ties
from .multipliers import BandwidthChoice, generate_multipliers, select_bandwidth
from .rank_statistics import autocopula_component, df_component, dh_component
from .second_order import KernelSpec, u_component

logger = logging.getLogger(__name__)

KURTOSIS_LIMIT = 10.0


@dataclass(frozen=True)
class TestOptions:
    """
    Settings of a single-series test.

    Parameters
    ----------
    preset : str
        Named test, see :func:`cusumkit.analysis.combination.preset`
    h : int
        Embedding dimension
    replicates : int
        Number M of multiplier replicates
    seed : int, optional
        64-bit seed of the multiplier set; fresh entropy (recorded in the
        report) if None
    psi : str
        "fisher" or "stouffer"
    bandwidth : int, optional
        Fixed b_n; estimated from the data if None
    strict_ties : bool
        Reject tied data instead of using mid-ranks
    derivative_bandwidth : float, optional
        Bandwidth of the autocopula partial-derivative estimator,
        min(n^{-1/2}, 1/2) if None
    """

    preset: str = "dc"
    h: int = 2
    replicates: int = 1000
    seed: Optional[int] = None
    psi: str = "fisher"
    bandwidth: Optional[int] = None
    strict_ties: bool = False
    derivative_bandwidth: Optional[float] = None

    __test__ = False

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("Need at least one replicate, got %d" % self.replicates)
        if self.psi not in ("fisher", "stouffer"):
            raise ValueError("Unknown combination function %r, expected fisher or stouffer" % (self.psi,))


def fresh_seed() -> int:
    """A random 64-bit seed drawn from OS entropy"""
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


def _kernel(name):
    if name == "m":
        return KernelSpec("mean")
    if name == "v":
        return KernelSpec("variance")
    return KernelSpec("autocov", int(name.split("@")[1]))


def _component_key(name, h):
    # with n fixed, only c and dh depend on h
    return (name, h) if name in ("c", "dh") else (name,)


class _Evaluation:
    """Components and multiplier sets of one series, shared between presets"""

    def __init__(self, series, n, options):
        self.series = series
        self.n = n
        self.options = options
        self.seed = fresh_seed() if options.seed is None else int(options.seed)
        self.bandwidths = {}
        self.multipliers = {}
        self.components = {}
        self.data_notes = []

    def bandwidth(self, second_order_only, h):
        """The bandwidth choice and the notes it produced"""
        if self.options.bandwidth is not None:
            return BandwidthChoice.fixed(self.options.bandwidth), []

        # second-order tests estimate from X_1..X_n, rank tests from X_1..X_{n+h-1}
        stop = self.n if second_order_only else self.n + h - 1
        if stop not in self.bandwidths:
            bw = select_bandwidth(Series(self.series.values[:stop]), n=self.n)
            notes = []
            if bw.fallback:
                notes.append("Constant series: bandwidth estimation not possible, b_n = 1 used")
            self.bandwidths[stop] = (bw, notes)
            logger.info("Bandwidth b_n=%d from %d observations", bw.b_n, stop)

        return self.bandwidths[stop]

    def multiplier_set(self, bw):
        if bw.b_n not in self.multipliers:
            self.multipliers[bw.b_n] = generate_multipliers(self.n, self.options.replicates, bw, self.seed)
        return self.multipliers[bw.b_n]

    def component(self, name, h, mults):
        key = _component_key(name, h) + (mults.b_n,)

        if key not in self.components:
            window = Series(self.series.values[: self.n + h - 1])
            delta = self.options.derivative_bandwidth

            if name == "d":
                res = df_component(window, mults)
            elif name == "dh":
                res = dh_component(window, h, mults)
            elif name == "c":
                res = autocopula_component(window, h, mults, delta=delta)
            elif name.startswith("c@"):
                res = autocopula_component(window, h, mults, q=int(name[2:]), delta=delta)
            else:
                res = u_component(window, h, _kernel(name), mults)

            self.components[key] = res

        return self.components[key]


def _has_second_order(tmpl):
    return any(name in ("m", "v") or name.startswith("a@") for name in tmpl.names)


def _check_series(series, n, tmpl):
    if n < 2:
        raise DataError("Series of length %d is too short for h=%d" % (series.N, tmpl.h))
    if _has_second_order(tmpl) and n < 5:
        raise DataError("Second-order tests need n >= 5 points, the series gives n=%d for h=%d" % (n, tmpl.h))


def evaluate_presets(
    series: Series, presets: Sequence[Tuple[str, int]], options: Optional[TestOptions] = None, n: Optional[int] = None
) -> List[TestReport]:
    """
    Runs several tests on one series with shared multiplier randomness.

    Parameters
    ----------
    series : Series
    presets : sequence of (name, h)
    options : TestOptions, optional
        Everything but ``preset`` and ``h`` is taken from here
    n : int, optional
        Number of embedded points every test uses (the test with embedding
        dimension h then reads X_1..X_{n+h-1}). Defaults to N - h_max + 1.

    Returns
    -------
    list of TestReport, in the order of ``presets``
    """
    options = TestOptions() if options is None else options
    templates = [preset(name, h) for name, h in presets]

    if not templates:
        return []

    h_max = max(tmpl.h for tmpl in templates)
    n = series.N - h_max + 1 if n is None else n

    if n + h_max - 1 > series.N:
        raise DataError("Series of length %d is too short for n=%d and h=%d" % (series.N, n, h_max))

    for tmpl in templates:
        _check_series(series, n, tmpl)

    ties = check_ties(Series(series.values[: n + h_max - 1]), strict=options.strict_ties)

    evaluation = _Evaluation(series, n, options)
    if ties:
        evaluation.data_notes.append("Series contains tied values; mid-ranks were used")

    return [_evaluate(evaluation, tmpl, ties) for tmpl in templates]


def _evaluate(evaluation: _Evaluation, tmpl: Preset, ties: bool) -> TestReport:
    options = evaluation.options

    bw, bandwidth_notes = evaluation.bandwidth(tmpl.second_order_only, tmpl.h)
    mults = evaluation.multiplier_set(bw)
    results = [evaluation.component(name, tmpl.h, mults) for name in tmpl.names]

    window = evaluation.series.values[: evaluation.n + tmpl.h - 1]
    notes = evaluation.data_notes + bandwidth_notes

    if _has_second_order(tmpl):
        excess = float(kurtosis(window))
        if excess > KURTOSIS_LIMIT:
            message = (
                "Sample excess kurtosis %.1f is extreme; second-order tests assume finite higher moments" % excess
            )
            warnings.warn(message)
            notes.append(message)

    clipped = sum(res.diagnostics.get("clipped_derivatives", 0) for res in results)
    if clipped:
        logger.info("%d partial derivative estimates clipped to [0, 1]", clipped)

    meta: Dict = {
        "preset": tmpl.name,
        "h": tmpl.h,
        "N": int(window.shape[0]),
        "n": evaluation.n,
        "M": options.replicates,
        "seed": evaluation.seed,
        "psi": options.psi,
        "bandwidth": bw.to_dict(),
        "ties": bool(ties),
        "clipped_derivatives": int(clipped),
        "warnings": list(dict.fromkeys(notes)),
    }

    spec = CombinationSpec(components=tuple(zip(results, (w for _, w in tmpl.components))), psi=options.psi)
    return combine(spec, meta)


def test_stationarity(series, options: Optional[TestOptions] = None, **kwargs) -> TestReport:
    """
    Tests a single series for stationarity.

    Parameters
    ----------
    series : Series or array_like
    options : TestOptions, optional
    **kwargs
        Overrides of individual :class:`TestOptions` fields

    Returns
    -------
    TestReport
    """
    if not isinstance(series, Series):
        series = Series(series)

    options = TestOptions() if options is None else options
    if kwargs:
        options = replace(options, **kwargs)

    return evaluate_presets(series, [(options.preset, options.h)], options)[0]


test_stationarity.__test__ = False
