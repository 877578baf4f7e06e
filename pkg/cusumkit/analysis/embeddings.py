"""
Serial embeddings and pseudo-observations
=========================================

Everything the test statistics share: the input :class:`Series`, the serial
embedding of a univariate stretch X_1, ..., X_N into the n = N - h + 1
overlapping vectors (X_i, ..., X_{i+h-1}), the segment empirical d.f.s
G_{k:l} and the empirical autocopulas C_{k:l} computed from them.

Segment bounds
--------------

The pointwise functions (:func:`marginal_edf`, :func:`autocopula_eval`) take
1-based inclusive segment bounds ``k <= l`` on the embedded points, so that

    G_{k:l}(x) = #{ j in [k, l+h-1] : X_j <= x } / (l + h - k)

reads off directly. The statistics work on whole arrays and use the
0-based :func:`segment_ranks` helper.

Embeddings come in two flavours:

* the full embedding, offsets ``(0, 1, ..., h-1)``;
* the pair embedding at lag ``q - 1``, offsets ``(0, q-1)``, which keeps the
  same number of points n = N - h + 1 as the full embedding.

Ties
----

The estimators assume continuous margins. Tie-free data is ranked with the
"max" convention, which is exactly the counting formula above. If ties are
present the statistics fall back to mid-ranks (``method="average"``) and the
caller is warned; strict mode rejects tied input instead.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from ..exceptions import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Series:
    """
    An ordered univariate sample X_1, ..., X_N.

    Parameters
    ----------
    values : array_like
        Finite real observations, at least two of them. The tests need
        more: every CUSUM statistic at least n = 2 embedded points, the
        second-order ones 5 and the bandwidth estimate 8 observations, and
        those checks are made where the statistic is computed. Two or three
        values are enough for the pointwise functions (:func:`marginal_edf`,
        :func:`embed`, kernel U-statistics).
    name : str, optional
        Label carried into reports.
    """

    values: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)

        if values.ndim != 1:
            raise DataError("A series must be one-dimensional, got shape %s" % (values.shape,))
        if values.shape[0] < 2:
            raise DataError("A series needs at least 2 observations, got %d" % values.shape[0])
        if not np.isfinite(values).all():
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DataError("Series contains a non-finite value at position %d" % (bad + 1))

        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.N

    def has_ties(self) -> bool:
        return np.unique(self.values).shape[0] < self.N

    def num_points(self, h: int) -> int:
        """Number n = N - h + 1 of embedded points for embedding dimension h"""
        return self.N - h + 1


@dataclass(frozen=True)
class EmbeddingConfig:
    """
    Embedding dimension and optional pairwise lags.

    Parameters
    ----------
    h : int
        Embedding dimension, h - 1 being the largest lag examined.
    lag_pairs : tuple of int, optional
        Values q in {2, ..., h} selecting the pairs (X_i, X_{i+q-1}).
    """

    h: int = 2
    lag_pairs: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if int(self.h) != self.h or self.h < 1:
            raise ValueError("Embedding dimension h must be a positive integer, got %r" % (self.h,))

        if self.lag_pairs is not None:
            lag_pairs = tuple(int(q) for q in self.lag_pairs)

            for q in lag_pairs:
                if not 2 <= q <= self.h:
                    raise ValueError("Pair index q=%d must satisfy 2 <= q <= h=%d" % (q, self.h))

            object.__setattr__(self, "lag_pairs", lag_pairs)

    def offsets(self, q: Optional[int] = None) -> Tuple[int, ...]:
        """Column offsets of the embedding (full embedding if q is None)"""
        if q is None:
            return tuple(range(self.h))

        if not 2 <= q <= self.h:
            raise ValueError("Pair index q=%d must satisfy 2 <= q <= h=%d" % (q, self.h))

        return (0, q - 1)


@dataclass(frozen=True, eq=False)
class PseudoSample:
    """Rank-transformed embedded points G_{k:l}(X_{i+j-1}), one row per point"""

    points: np.ndarray
    n: int
    h: int


def check_embedding(series: Series, h: int) -> int:
    """Validates h against the series length and returns n = N - h + 1"""
    if int(h) != h or h < 1:
        raise ValueError("Embedding dimension h must be a positive integer, got %r" % (h,))
    if h > series.N:
        raise DataError("Embedding dimension h=%d exceeds the series length N=%d" % (h, series.N))

    return series.N - h + 1


def check_ties(series: Series, strict: bool = False) -> bool:
    """
    Detects exact ties in the series.

    Returns True if ties were found (after warning); raises
    :class:`DataError` instead when ``strict`` is set.
    """
    if not series.has_ties():
        return False

    num_ties = series.N - np.unique(series.values).shape[0]

    if strict:
        raise DataError("Series contains %d tied values; strict mode rejects ties" % num_ties)

    warnings.warn(
        "Series contains %d tied values, using mid-ranks; the tests assume continuous margins" % num_ties
    )
    return True


def rank_method(values: np.ndarray) -> str:
    """Ranking convention: the counting formula without ties, mid-ranks with ties"""
    return "average" if np.unique(values).shape[0] < values.shape[0] else "max"


def segment_ranks(values, start, stop, method="max"):
    """
    Ranks of values[start:stop] within that stretch (0-based, half-open).

    With ``method="max"`` the rank of X_j is #{i in stretch : X_i <= X_j},
    so that rank / len(stretch) is the segment empirical d.f. at X_j.
    """
    return rankdata(values[start:stop], method=method)


def embed(series: Series, cfg: EmbeddingConfig) -> np.ndarray:
    """
    Serial embedding of a series.

    Parameters
    ----------
    series : Series
    cfg : EmbeddingConfig

    Returns
    -------
    n x h array whose i-th row is (X_i, ..., X_{i+h-1}) for the full
    embedding; with ``cfg.lag_pairs`` an array of shape (len(lag_pairs), n, 2)
    holding (X_i, X_{i+q-1}) for each q, with the same n = N - h + 1.
    """
    n = check_embedding(series, cfg.h)
    x = series.values

    if cfg.lag_pairs is None:
        return embed_offsets(x, n, cfg.offsets())

    return np.stack([embed_offsets(x, n, cfg.offsets(q)) for q in cfg.lag_pairs])


def embed_offsets(x, n, offsets):
    """Rows (x[i + o] for o in offsets), i = 0..n-1"""
    indices = np.arange(n)[:, None] + np.asarray(offsets)[None, :]
    return x[indices]


def _check_segment(series, k, l, h):
    n = check_embedding(series, h)
    if not (1 <= k <= l <= n):
        raise ValueError("Segment bounds must satisfy 1 <= k <= l <= n=%d, got k=%r, l=%r" % (n, k, l))
    return n


def marginal_edf(series: Series, k: int, l: int, h: int, x: float) -> float:
    """
    Segment empirical d.f. G_{k:l} of X_k, ..., X_{l+h-1} evaluated at x.

    Parameters
    ----------
    series : Series
    k, l : int
        1-based inclusive bounds on the embedded points, 1 <= k <= l <= N-h+1
    h : int
        Embedding dimension
    x : float

    Returns
    -------
    #{ j in [k, l+h-1] : X_j <= x } / (l + h - k)
    """
    _check_segment(series, k, l, h)
    stretch = series.values[k - 1 : l + h - 1]
    return np.count_nonzero(stretch <= x) / (l + h - k)


def pseudo_observations(
    series: Series, h: int, k: int = 1, l: Optional[int] = None, q: Optional[int] = None, method: str = "max"
) -> PseudoSample:
    """
    Pseudo-observations of the embedded points k..l (1-based, inclusive).

    Row i holds G_{k:l}(X_{i+o}) for the offsets o of the embedding, where
    G_{k:l} is computed from the stretch X_k, ..., X_{l+s} and s is the
    largest offset (h - 1 for the full embedding, q - 1 for a pair).
    """
    n = check_embedding(series, h)
    l = n if l is None else l
    _check_segment(series, k, l, h)

    offsets = EmbeddingConfig(h).offsets(q)
    span = offsets[-1]

    ranks = segment_ranks(series.values, k - 1, l + span, method=method)
    points = embed_offsets(ranks, l - k + 1, offsets) / ranks.shape[0]

    return PseudoSample(points=points, n=l - k + 1, h=len(offsets))


def autocopula_eval(
    series: Series, k: int, l: int, h: int, u: Sequence[float], q: Optional[int] = None, method: str = "max"
) -> float:
    """
    Empirical autocopula C_{k:l} of the embedded points k..l evaluated at u.

    Parameters
    ----------
    series : Series
    k, l : int
        1-based inclusive bounds on the embedded points. By convention the
        result is 0 when k > l.
    h : int
        Embedding dimension
    u : sequence of float
        Point of [0,1]^h (of [0,1]^2 when q is given)
    q : int, optional
        Evaluate the bivariate autocopula of the pairs (X_i, X_{i+q-1})
    method : str
        Ranking convention, see :func:`rank_method`

    Returns
    -------
    (1/(l-k+1)) sum_{i=k}^{l} prod_j 1{ G_{k:l}(X_{i+o_j}) <= u_j }
    """
    u = np.asarray(u, dtype=float)
    dim = h if q is None else 2

    if u.shape != (dim,):
        raise ValueError("Evaluation point must have %d coordinates, got shape %s" % (dim, u.shape))
    if ((u < 0) | (u > 1)).any():
        raise ValueError("Evaluation point must lie in [0,1]^%d" % dim)

    if k > l:
        return 0.0

    sample = pseudo_observations(series, h, k, l, q=q, method=method)
    return np.count_nonzero((sample.points <= u[None, :]).all(axis=1)) / sample.n
