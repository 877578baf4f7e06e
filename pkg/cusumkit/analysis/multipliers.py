"""
Dependent multiplier sequences
==============================

The resampling randomness of every test: M independent copies of a
stationary, mean-zero, unit-variance multiplier sequence that is
ell_n-dependent, with ell_n = 2 b_n - 1. Each copy is a moving average of
i.i.d. standard normals with Parzen kernel weights

    xi_i = sum_{j=1}^{ell_n} w_j Z_{j+i-1},   w_j ~ kappa((j - b_n) / b_n),

normalized so that sum_j w_j^2 = 1.

Bandwidth
---------

:func:`select_bandwidth` picks b_n from the data. It reads off the number m
of leading significant sample autocorrelations (flat-top style: the first
lag k after which two consecutive autocorrelations fall under
2 sqrt(log(n) / n)), sets ell_n ~ (2m + 1) n^{1/5} and caps
b_n <= ceil(n^{0.4} / 2). The rule grows with the serial dependence of the
data and keeps the n^{1/5} rate; it is a surrogate for the fully
data-adaptive procedure and is flagged as ``mode="auto"`` in reports.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions import DataError
from .embeddings import Series

logger = logging.getLogger(__name__)


def parzen(x):
    """
    Parzen's kernel.

    Parameters
    ----------
    x : float or array_like

    Returns
    -------
    (1 - 6x^2 + 6|x|^3) for |x| <= 1/2, 2(1 - |x|)^3 for 1/2 < |x| <= 1 and
    0 elsewhere; a float for scalar input.
    """
    ax = np.abs(np.asarray(x, dtype=float))

    inner = 1 - 6 * ax**2 + 6 * ax**3
    outer = 2 * (1 - ax) ** 3

    out = np.where(ax <= 0.5, inner, np.where(ax <= 1, outer, 0.0))
    return float(out) if out.ndim == 0 else out


def multiplier_weights(b_n: int) -> np.ndarray:
    """Normalized Parzen weights w_1, ..., w_{ell_n} of the moving average"""
    if int(b_n) != b_n or b_n < 1:
        raise ValueError("Bandwidth b_n must be a positive integer, got %r" % (b_n,))

    j = np.arange(1, 2 * b_n)
    w = parzen((j - b_n) / b_n)

    return w / np.sqrt(np.sum(w**2))


def multiplier_autocorrelation(b_n: int, p: int) -> float:
    """Closed-form Corr(xi_i, xi_{i+p}) = sum_j w_j w_{j+p}, zero for p >= ell_n"""
    w = multiplier_weights(b_n)
    p = abs(int(p))

    if p >= w.shape[0]:
        return 0.0

    return float(np.dot(w[: w.shape[0] - p], w[p:]))


@dataclass(frozen=True)
class BandwidthChoice:
    """
    Bandwidth of the multiplier sequences.

    Parameters
    ----------
    mode : str
        "fixed" (user supplied) or "auto" (estimated from the data)
    b_n : int
        Block half-width, at least 1
    rho1 : float, optional
        Lag-1 sample autocorrelation (auto mode)
    significant_lags : int, optional
        Number m of leading significant autocorrelations (auto mode)
    fallback : bool
        True when the data carried no usable information (constant input)
        and b_n = 1 was used instead.
    """

    mode: str
    b_n: int
    rho1: Optional[float] = None
    significant_lags: Optional[int] = None
    fallback: bool = False

    def __post_init__(self):
        if self.mode not in ("fixed", "auto"):
            raise ValueError("Bandwidth mode must be 'fixed' or 'auto', got %r" % (self.mode,))
        if int(self.b_n) != self.b_n or self.b_n < 1:
            raise ValueError("Bandwidth b_n must be a positive integer, got %r" % (self.b_n,))

        object.__setattr__(self, "b_n", int(self.b_n))

    @classmethod
    def fixed(cls, b_n: int) -> "BandwidthChoice":
        return cls(mode="fixed", b_n=b_n)

    @property
    def ell_n(self) -> int:
        return 2 * self.b_n - 1

    def to_dict(self):
        return {
            "mode": self.mode,
            "b_n": self.b_n,
            "ell_n": self.ell_n,
            "rho1": self.rho1,
            "significant_lags": self.significant_lags,
            "fallback": self.fallback,
        }


def bandwidth_cap(n: int) -> int:
    """Largest admissible b_n: ceil(n^0.4 / 2), and ell_n <= n"""
    return max(1, min(int(np.ceil(n**0.4 / 2)), (n + 1) // 2))


def sample_autocorrelations(x, max_lag):
    """Sample autocorrelations rho(1), ..., rho(max_lag) of a non-constant series"""
    eps = np.asarray(x, dtype=float)
    eps = eps - eps.mean()
    nobs = eps.shape[0]
    var = eps @ eps

    return np.array([eps[k:] @ eps[: nobs - k] / var for k in range(1, max_lag + 1)])


def select_bandwidth(series: Series, mode: str = "auto", n: Optional[int] = None) -> BandwidthChoice:
    """
    Data-driven choice of the multiplier bandwidth b_n.

    Parameters
    ----------
    series : Series
        Data the dependence is estimated from (at least 8 values).
    mode : str
        Only "auto" is estimated here; use :meth:`BandwidthChoice.fixed` for a
        user-supplied value.
    n : int, optional
        Number of multipliers the choice is for, used for the cap. Defaults
        to the series length.

    Returns
    -------
    BandwidthChoice with b_n = max(1, round((2m + 1) n^{1/5} / 2)), capped
    at :func:`bandwidth_cap`.
    """
    if mode != "auto":
        raise ValueError("select_bandwidth only estimates in 'auto' mode, got %r" % (mode,))

    x = series.values
    nobs = x.shape[0]
    n = nobs if n is None else n

    if nobs < 8:
        raise DataError("Bandwidth estimation needs at least 8 observations, got %d" % nobs)

    if np.ptp(x) == 0:
        warnings.warn("Constant series: bandwidth estimation is not possible, using b_n = 1")
        return BandwidthChoice(mode="auto", b_n=1, fallback=True)

    max_lag = min(int(np.ceil(np.sqrt(nobs))) + 5, nobs - 2)
    cv = 2 * np.sqrt(np.log(nobs) / nobs)
    acorr = sample_autocorrelations(x, max_lag + 1)
    abs_acorr = np.abs(acorr)

    # abs_acorr[k - 1] holds |rho(k)|
    insignificant = abs_acorr < cv
    pairs = np.flatnonzero(insignificant[:-1] & insignificant[1:])
    m = int(pairs[0]) if pairs.shape[0] else max_lag

    b_n = max(1, int(np.round((2 * m + 1) * n**0.2 / 2)))
    b_n = min(b_n, bandwidth_cap(n))

    logger.debug("Bandwidth: rho(1)=%.3f, %d significant lags, b_n=%d", acorr[0], m, b_n)

    return BandwidthChoice(mode="auto", b_n=b_n, rho1=float(acorr[0]), significant_lags=m)


@dataclass(frozen=True, eq=False)
class MultiplierSet:
    """
    M independent dependent-multiplier sequences of length n.

    Row m is (xi_1^{[m]}, ..., xi_n^{[m]}), generated from its own substream of
    ``seed`` so that rows do not depend on how many are drawn or in which
    order.
    """

    sequences: np.ndarray
    b_n: int
    seed: int

    @property
    def ell_n(self) -> int:
        return 2 * self.b_n - 1

    @property
    def M(self) -> int:
        return self.sequences.shape[0]

    @property
    def n(self) -> int:
        return self.sequences.shape[1]


def generate_multipliers(n: int, M: int, bw: BandwidthChoice, seed: int) -> MultiplierSet:
    """
    Generates M dependent multiplier sequences by the Parzen moving average.

    Parameters
    ----------
    n : int
        Sequence length, at least 2
    M : int
        Number of sequences, at least 1
    bw : BandwidthChoice
    seed : int
        Non-negative 64-bit seed; row m uses the substream ``(seed, m)``

    Returns
    -------
    MultiplierSet
    """
    if n < 2:
        raise ValueError("Multiplier sequences need n >= 2, got %d" % n)
    if M < 1:
        raise ValueError("Need at least one multiplier sequence, got M=%d" % M)
    if bw.ell_n > n:
        raise ValueError("Bandwidth b_n=%d gives ell_n=%d > n=%d" % (bw.b_n, bw.ell_n, n))

    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("Seed must be a non-negative 64-bit integer, got %d" % seed)

    w = multiplier_weights(bw.b_n)
    ell = w.shape[0]

    Z = np.empty((M, n + ell - 1))
    for m in range(M):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(m,)))
        Z[m] = rng.standard_normal(n + ell - 1)

    xi = np.zeros((M, n))
    for j in range(ell):
        xi += w[j] * Z[:, j : j + n]

    xi.setflags(write=False)
    logger.debug("Generated %d multiplier sequences of length %d (b_n=%d)", M, n, bw.b_n)

    return MultiplierSet(sequences=xi, b_n=bw.b_n, seed=seed)
