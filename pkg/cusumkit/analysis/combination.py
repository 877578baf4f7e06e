"""
Combining dependent component tests
===================================

Component tests computed with one shared set of multiplier sequences are
combined as follows:

1. every statistic T^[0] and each of its replicates T^[1..M] is turned into
   an approximate p-value with respect to the replicates,

       p(T^[i]) = (1/2 + #{ k >= 1 : T^[k] >= T^[i] }) / (M + 1),

2. the r component p-values of each row i = 0..M are mapped to
   W^[i] = psi(p_1, ..., p_r) with Fisher's or Stouffer's function,

3. the global p-value is (1/M) #{ k >= 1 : W^[k] >= W^[0] }.

Because the replicates of all components share their randomness, the rows
W^[1..M] reproduce the dependence between the components and no
independence correction is needed.
"""

import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from ..exceptions import ContractViolation
from .rank_statistics import ComponentResult

logger = logging.getLogger(__name__)

REPORT_SCHEMA = 1


def component_pvalues(results: Sequence[ComponentResult]) -> np.ndarray:
    """
    Approximate p-values of every statistic and replicate.

    Parameters
    ----------
    results : sequence of ComponentResult
        r components with the same number M of replicates

    Returns
    -------
    (M+1) x r array; row 0 holds the p-values of the observed statistics,
    row i >= 1 those of the i-th replicates.
    """
    if len(results) == 0:
        raise ValueError("Need at least one component")

    M = results[0].M
    for res in results:
        if res.M != M:
            raise ValueError("Components have different replicate counts (%d and %d)" % (M, res.M))
    if M < 1:
        raise ValueError("Components need at least one replicate")

    P = np.empty((M + 1, len(results)))

    for j, res in enumerate(results):
        values = np.concatenate([[res.statistic], res.replicates])
        ordered = np.sort(res.replicates)
        exceed = M - np.searchsorted(ordered, values, side="left")
        P[:, j] = (0.5 + exceed) / (M + 1)

    return P


def _check_psi_args(p, w):
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)

    if ((p <= 0) | (p >= 1) | np.isnan(p)).any():
        raise ValueError("p-values must lie in the open interval (0, 1)")
    if w.shape != p.shape[-1:]:
        raise ValueError("Got %d weights for %d p-values" % (w.shape[0], p.shape[-1]))
    if (w <= 0).any():
        raise ValueError("Weights must be strictly positive")

    return p, w


def psi_fisher(p, w):
    """
    Fisher's combination -2 sum_j w_j log(p_j).

    ``p`` may be a vector of r p-values or a matrix with one row per
    combination; the result is a float or a vector accordingly.
    """
    p, w = _check_psi_args(p, w)
    return -2 * np.sum(w * np.log(p), axis=-1)


def psi_stouffer(p, w):
    """Stouffer's combination sum_j w_j Phi^{-1}(1 - p_j)"""
    p, w = _check_psi_args(p, w)
    # isf(p) = Phi^{-1}(1 - p) without cancellation for small p
    return np.sum(w * norm.isf(p), axis=-1)


PSI = {"fisher": psi_fisher, "stouffer": psi_stouffer}


@dataclass(frozen=True)
class CombinationSpec:
    """Components with their strictly positive weights and the combining function"""

    components: Tuple[Tuple[ComponentResult, float], ...]
    psi: str = "fisher"

    def __post_init__(self):
        if self.psi not in PSI:
            raise ValueError("Unknown combination function %r, expected fisher or stouffer" % (self.psi,))
        if len(self.components) == 0:
            raise ValueError("Need at least one component")
        for res, weight in self.components:
            if not weight > 0:
                raise ValueError("Weight of component %s must be positive, got %r" % (res.name, weight))

        object.__setattr__(self, "components", tuple(self.components))

    @property
    def results(self) -> List[ComponentResult]:
        return [res for res, _ in self.components]

    @property
    def weights(self) -> np.ndarray:
        return np.array([weight for _, weight in self.components], dtype=float)


@dataclass
class ComponentSummary:
    name: str
    statistic: float
    pvalue: float
    weight: float


@dataclass
class TestReport:
    """
    Outcome of a (combined) test.

    ``pvalue`` is the global p-value; it can be exactly 0, which is displayed
    as ``< 1/M``.
    """

    components: List[ComponentSummary]
    W: float
    pvalue: float
    meta: Dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> Dict:
        return {
            "schema": REPORT_SCHEMA,
            "components": [
                {"name": c.name, "statistic": c.statistic, "pvalue": c.pvalue, "weight": c.weight}
                for c in self.components
            ],
            "global": {"W": self.W, "p": self.pvalue},
            "meta": dict(self.meta),
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def render(self) -> str:
        """Human readable table: statistics, raw p-values and p-values x 100"""
        M = self.meta.get("M")
        lines = []

        title = "Preset %s" % self.meta.get("preset", "?")
        if "h" in self.meta:
            title += " (h=%d)" % self.meta["h"]
        lines.append(title)

        lines.append("%-8s %12s %10s %8s %8s" % ("test", "statistic", "p-value", "x100", "weight"))
        for c in self.components:
            lines.append(
                "%-8s %12.6g %10.6f %8.1f %8.4f" % (c.name, c.statistic, c.pvalue, 100 * c.pvalue, c.weight)
            )

        if self.pvalue == 0 and M:
            shown = "< 1/%d" % M
            shown100 = "< %.1f" % (100 / M)
        else:
            shown = "%.6f" % self.pvalue
            shown100 = "%.1f" % (100 * self.pvalue)

        lines.append("%-8s %12.6g %10s %8s" % ("global", self.W, shown, shown100))

        details = ["%s=%s" % (key, self.meta[key]) for key in ("n", "M", "seed", "psi") if key in self.meta]
        if "bandwidth" in self.meta:
            bw = self.meta["bandwidth"]
            details.append("b_n=%d (%s)" % (bw["b_n"], bw["mode"]))
        lines.append(", ".join(details))

        for message in self.meta.get("warnings", []):
            lines.append("warning: %s" % message)

        return "\n".join(lines)


def replicate_ties(results: Sequence[ComponentResult]) -> List[str]:
    """Names of the components whose replicates contain exact ties"""
    return [res.name for res in results if np.unique(res.replicates).shape[0] < res.M]


def combine(spec: CombinationSpec, meta: Optional[Dict] = None) -> TestReport:
    """
    Global test from components computed with one shared multiplier set.

    Parameters
    ----------
    spec : CombinationSpec
    meta : dict, optional
        Provenance recorded in the report; a ``warnings`` list in it is
        extended with the combiner's own findings.

    Returns
    -------
    TestReport with W = psi(p(T^[0])) and global p-value
    (1/M) sum_k 1(W^[k] >= W^[0]).
    """
    results = spec.results

    sets = {res.multipliers for res in results}
    if len(sets) > 1:
        raise ContractViolation(
            "Components were computed with different multiplier sets (seed, b_n): %s"
            % ", ".join(sorted(map(str, sets)))
        )

    P = component_pvalues(results)
    W = PSI[spec.psi](P, spec.weights)
    pvalue = float(np.mean(W[1:] >= W[0]))

    meta = dict(meta or {})
    notes = list(meta.get("warnings", []))

    for name in replicate_ties(results):
        message = "Replicates of component %s contain ties" % name
        warnings.warn(message)
        notes.append(message)

    meta["warnings"] = notes
    meta.setdefault("M", results[0].M)
    meta.setdefault("seed", results[0].seed)
    meta.setdefault("psi", spec.psi)

    components = [
        ComponentSummary(name=res.name, statistic=float(res.statistic), pvalue=float(P[0, j]), weight=float(w))
        for j, (res, w) in enumerate(spec.components)
    ]

    logger.debug("Combined %d components: W=%.4f, p=%.4f", len(results), W[0], pvalue)

    return TestReport(components=components, W=float(W[0]), pvalue=pvalue, meta=meta)


@dataclass(frozen=True)
class Preset:
    """A named combination template: component identifiers and their weights"""

    name: str
    h: int
    components: Tuple[Tuple[str, float], ...]

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.components]

    @property
    def second_order_only(self) -> bool:
        return all(name == "m" or name == "v" or name.startswith("a@") for name in self.names)


SINGLE_PRESETS = ("d", "c", "dh", "m", "v", "a")
COMBINED_PRESETS = ("dc", "dcp", "va", "mva")


def preset(name: str, h: int) -> Preset:
    """
    Component identifiers and weights of a named test.

    Parameters
    ----------
    name : str
        d, c, dh, m, v, a (single tests), dc, dcp, va, mva (combined tests),
        or c<L> for the autocopula test of the pairs at lag L alone
    h : int
        Embedding dimension

    Returns
    -------
    Preset, e.g. dcp with h = 3 gives (("d", 1/2), ("c@2", 1/4), ("c@3", 1/4))
    """
    if int(h) != h or h < 1:
        raise ValueError("Embedding dimension h must be a positive integer, got %r" % (h,))

    serial = name not in ("d", "m", "v")
    if serial and h < 2:
        raise ValueError("Preset %s looks at serial dependence and needs h >= 2, got h=%d" % (name, h))

    lags = range(2, h + 1)

    if name in ("d", "m", "v", "c", "dh"):
        components = ((name, 1.0),)
    elif name == "a":
        components = (("a@%d" % h, 1.0),)
    elif name == "dc":
        components = (("d", 0.5), ("c", 0.5))
    elif name == "dcp":
        components = (("d", 0.5),) + tuple(("c@%d" % q, 1 / (2 * (h - 1))) for q in lags)
    elif name == "va":
        components = (("v", 0.5),) + tuple(("a@%d" % q, 1 / (2 * (h - 1))) for q in lags)
    elif name == "mva":
        components = (("m", 1 / 3), ("v", 1 / 3)) + tuple(("a@%d" % q, 1 / (3 * (h - 1))) for q in lags)
    elif name[:1] == "c" and name[1:].isdigit():
        lag = int(name[1:])
        if not 1 <= lag <= h - 1:
            raise ValueError("Preset %s needs 1 <= lag <= h-1=%d" % (name, h - 1))
        components = (("c@%d" % (lag + 1), 1.0),)
    else:
        raise ValueError(
            "Unknown preset %r, expected one of %s or c<lag>" % (name, ", ".join(SINGLE_PRESETS + COMBINED_PRESETS))
        )

    return Preset(name=name, h=int(h), components=components)
