"""
Rank-based CUSUM statistics
===========================

The component tests looking at the whole distribution of the series:

* ``d``: the d.f. test S_{n,G}, comparing segment empirical d.f.s of
  X_1, ..., X_n before and after each split point;
* ``c``: the autocopula test S_{n,C^(h)}, comparing segment empirical
  autocopulas of the embedded points (X_i, ..., X_{i+h-1});
* ``c@q``: the autocopula test on the pairs (X_i, X_{i+q-1}) only;
* ``dh``: the d.f. test on the h-dimensional embedded points, a comparison
  baseline.

Every statistic is a maximum over split points k = 1, ..., n-1 of

    (1/n) sum_{t=1}^{n} D(k, t)^2,
    D(k, t) = sqrt(n) (k/n) ((n-k)/n) (F_{1:k}(p_t) - F_{k+1:n}(p_t))

with F a segment estimator and p_t the n sample (pseudo-)points. The factor
in front is :meth:`CusumWeights.split_factor`; the segment estimators are
kept as integer counts c_1/k and c_2/(n-k).

Multiplier replicates are of the form

    max_k (1/n) sum_t [ Chat(k, t) - (k/n) Chat(n, t) ]^2,
    Chat(k, t) = n^{-1/2} sum_{i<=k} xi_i E(i, t)

for an n x n influence matrix E, see :func:`cusum_replicates`.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .embeddings import EmbeddingConfig, Series, check_embedding, embed_offsets, rank_method, segment_ranks
from .multipliers import MultiplierSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ComponentResult:
    """
    One component test: its statistic and its M multiplier replicates.

    ``seed`` and ``b_n`` identify the multiplier set the replicates were
    computed with; components can only be combined if they share it.
    """

    name: str
    statistic: float
    replicates: np.ndarray
    n: int
    h: int
    seed: Optional[int] = None
    b_n: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.replicates.shape[0]

    @property
    def multipliers(self):
        return self.seed, self.b_n

    def pvalue(self) -> float:
        """Plain bootstrap p-value (1/M) sum_m 1(T^[m] >= T)"""
        return float(np.mean(self.replicates >= self.statistic))


@dataclass(frozen=True)
class CusumWeights:
    """
    Weights lambda_n(s, t) = (floor(nt) - floor(ns)) / n.

    They only change on the grid k/n, so they are indexed by the grid points
    j, k: ``CusumWeights(n)(j, k)`` is lambda_n(j/n, k/n) = (k - j) / n.
    """

    n: int

    def __call__(self, j, k):
        return (np.asarray(k, dtype=float) - np.asarray(j, dtype=float)) / self.n

    def split_factor(self, k):
        """sqrt(n) lambda_n(0, k/n) lambda_n(k/n, 1)"""
        return np.sqrt(self.n) * self(0, k) * self(k, self.n)


def _check_length(n):
    if n < 2:
        raise ValueError("CUSUM statistics need n >= 2 points, got %d" % n)


def dominance_matrix(x, n, offsets=(0,)):
    """
    Indicator matrix L[i, t] = prod_j 1{x[i + o_j] <= x[t + o_j]}, i, t < n.
    """
    points = embed_offsets(np.asarray(x, dtype=float), n, offsets)

    L = np.ones((n, n), dtype=bool)
    for j in range(points.shape[1]):
        L &= points[:, None, j] <= points[None, :, j]

    return L


def _count_statistic(c1, c2, n):
    """max_k mean_t D(k, t)^2 from the segment counts c1[k-1, t], c2[k-1, t]"""
    k = np.arange(1, n)
    D = CusumWeights(n).split_factor(k)[:, None] * (c1 / k[:, None] - c2 / (n - k)[:, None])
    return float(np.max(np.mean(D**2, axis=1)))


def _indicator_statistic(L):
    n = L.shape[0]
    cum = np.cumsum(L, axis=0, dtype=np.int64)
    c1 = cum[:-1]
    c2 = cum[-1][None, :] - c1
    return _count_statistic(c1, c2, n)


def stat_df(series: Series, n: Optional[int] = None) -> float:
    """
    The d.f. statistic S_{n,G} computed from X_1, ..., X_n.

    Parameters
    ----------
    series : Series
    n : int, optional
        Number of leading observations used (all of them by default). With
        embedding dimension h the other tests see n = N - h + 1 points and
        the trailing h - 1 values are ignored here.

    Returns
    -------
    max_{1 <= k < n} (1/n) sum_i [ sqrt(n) (k/n)((n-k)/n) (G_{1:k}(X_i) - G_{k+1:n}(X_i)) ]^2
    """
    n = series.N if n is None else n
    _check_length(n)
    if n > series.N:
        raise ValueError("n=%d exceeds the series length N=%d" % (n, series.N))

    return _indicator_statistic(dominance_matrix(series.values, n))


def stat_dh(series: Series, h: int) -> float:
    """
    The d.f. statistic on the embedded points (X_i, ..., X_{i+h-1}).

    Same recipe as :func:`stat_df` with the h-dimensional segment empirical
    d.f.s; reduces to it for h = 1.
    """
    n = check_embedding(series, h)
    _check_length(n)

    return _indicator_statistic(dominance_matrix(series.values, n, tuple(range(h))))


def _count_below(seg_ranks, d_seg, eval_ranks, d_eval):
    """
    #{ rows i : seg_ranks[i] / d_seg <= eval_ranks[t] / d_eval coordinatewise }
    for every row t of eval_ranks, compared exactly through cross products.
    """
    below = np.ones((seg_ranks.shape[0], eval_ranks.shape[0]), dtype=bool)
    for j in range(seg_ranks.shape[1]):
        below &= seg_ranks[:, None, j] * d_eval <= eval_ranks[None, :, j] * d_seg

    return np.count_nonzero(below, axis=0)


def autocopula_counts(x, n, offsets, method=None):
    """
    Segment counts of the empirical autocopula at the full-sample
    pseudo-observations.

    Parameters
    ----------
    x : ndarray
        Observations, at least n + max(offsets) of them
    n : int
        Number of embedded points
    offsets : tuple of int
        Embedding offsets, starting with 0
    method : str, optional
        Ranking convention (chosen from the data if None)

    Returns
    -------
    c1, c2 : ndarray
        (n-1) x n arrays with c1[k-1, t] = k C_{1:k}(u_t) and
        c2[k-1, t] = (n-k) C_{k+1:n}(u_t)
    """
    span = offsets[-1]
    x = np.asarray(x, dtype=float)[: n + span]
    method = rank_method(x) if method is None else method

    full = embed_offsets(segment_ranks(x, 0, n + span, method), n, offsets)
    d_full = n + span

    c1 = np.empty((n - 1, n), dtype=np.int64)
    c2 = np.empty((n - 1, n), dtype=np.int64)

    for k in range(1, n):
        left = embed_offsets(segment_ranks(x, 0, k + span, method), k, offsets)
        c1[k - 1] = _count_below(left, k + span, full, d_full)

        right = embed_offsets(segment_ranks(x, k, n + span, method), n - k, offsets)
        c2[k - 1] = _count_below(right, n - k + span, full, d_full)

    return c1, c2


def _autocopula_offsets(h, q):
    if q is None and h < 2:
        raise ValueError("The autocopula test needs h >= 2, got h=%d" % h)
    return EmbeddingConfig(h).offsets(q)


def stat_autocopula(series: Series, h: int, q: Optional[int] = None) -> float:
    """
    The autocopula statistic S_{n,C^(h)}.

    Parameters
    ----------
    series : Series
    h : int
        Embedding dimension; the test uses n = N - h + 1 points
    q : int, optional
        Use the pairs (X_i, X_{i+q-1}) instead of the full embedding

    Returns
    -------
    max_{1 <= k < n} (1/n) sum_t [ sqrt(n) (k/n)((n-k)/n) (C_{1:k}(u_t) - C_{k+1:n}(u_t)) ]^2
    where u_t are the full-sample pseudo-observations.
    """
    offsets = _autocopula_offsets(h, q)
    n = check_embedding(series, h)
    _check_length(n)

    c1, c2 = autocopula_counts(series.values, n, offsets)
    return _count_statistic(c1, c2, n)


def cusum_replicates(E: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """
    Multiplier replicates max_k (1/n) sum_t Dhat(k, t)^2.

    With a_k = 1(i <= k) - lambda_n(0, k/n), the inner sum is the quadratic
    form n^{-2} a_k' diag(xi) G diag(xi) a_k in the Gram matrix G = E E',
    so only M x n arrays are needed:

        a_k' Q a_k = P(k) - 2 (k/n) R(k) + (k/n)^2 R(n)

    with Q = diag(xi) G diag(xi), P(k) the sum of Q over [1, k]^2 and R(k)
    the sum of its first k rows.

    Parameters
    ----------
    E : ndarray
        n x n influence matrix, E[i, t] being the centred contribution of
        point i at evaluation point t
    xi : ndarray
        M x n multipliers

    Returns
    -------
    ndarray of M replicates
    """
    n = xi.shape[1]
    if E.shape != (n, n):
        raise ValueError("Influence matrix of shape %s does not match %d multipliers" % (E.shape, n))

    G = E @ E.T
    R = np.cumsum(xi * (xi @ G), axis=1)

    # P(k) - P(k-1) = 2 xi_k sum_{j<k} G[k, j] xi_j + xi_k^2 G[k, k]
    P = np.cumsum(xi * (2 * (xi @ np.tril(G, -1).T) + xi * np.diag(G)), axis=1)

    frac = CusumWeights(n)(0, np.arange(1, n))
    forms = P[:, :-1] - 2 * frac * R[:, :-1] + frac**2 * R[:, -1:]

    # rounding can leave tiny negative values where the form vanishes
    return np.maximum(np.max(forms, axis=1), 0.0) / n**2


def _check_multipliers(mults, n):
    if mults.n != n:
        raise ValueError("Multiplier set has %d columns, the statistic needs %d" % (mults.n, n))


def replicate_df(series: Series, mults: MultiplierSet, n: Optional[int] = None) -> np.ndarray:
    """
    Multiplier replicates of S_{n,G}.

    E[i, t] = 1(X_i <= X_t) - G_{1:n}(X_t), so that the partial sums are the
    processes Ghat^[m](k/n, X_t).
    """
    n = mults.n if n is None else n
    _check_multipliers(mults, n)
    _check_length(n)

    L = dominance_matrix(series.values, n).astype(float)
    return cusum_replicates(L - L.mean(axis=0)[None, :], mults.sequences)


def replicate_dh(series: Series, h: int, mults: MultiplierSet) -> np.ndarray:
    """Multiplier replicates of the embedded d.f. statistic, indicator products coordinatewise"""
    n = check_embedding(series, h)
    _check_multipliers(mults, n)

    L = dominance_matrix(series.values, n, tuple(range(h))).astype(float)
    return cusum_replicates(L - L.mean(axis=0)[None, :], mults.sequences)


def default_derivative_bandwidth(n: int) -> float:
    return min(n**-0.5, 0.5)


def autocopula_influence(x, n, offsets, delta=None, method=None):
    """
    Influence matrix of the autocopula multiplier process.

    E[i, t] = (A[i, t] - C(u_t)) - sum_j Cdot_j(u_t) (A_j[i, t] - C_j(u_t))

    where A[i, t] = 1(u_i <= u_t), A_j only compares coordinate j, C and C_j
    are their column means and Cdot_j is the finite-difference estimate of
    the j-th partial derivative of C_{1:n} with bandwidth ``delta``.

    Returns
    -------
    E : ndarray
        n x n influence matrix
    clipped : int
        Number of partial-derivative estimates clipped back to [0, 1]
    """
    span = offsets[-1]
    x = np.asarray(x, dtype=float)[: n + span]
    method = rank_method(x) if method is None else method
    delta = default_derivative_bandwidth(n) if delta is None else delta

    if not delta > 0:
        raise ValueError("Derivative bandwidth must be positive, got %r" % (delta,))

    U = embed_offsets(segment_ranks(x, 0, n + span, method), n, offsets) / (n + span)
    dim = U.shape[1]

    # marginal comparisons 1(u_ij <= v) at v = u_tj - delta, u_tj, u_tj + delta
    below = [U[:, None, j] <= U[None, :, j] for j in range(dim)]
    A = np.logical_and.reduce(below).astype(float)
    C = A.mean(axis=0)

    E = A - C[None, :]
    clipped = 0

    for j in range(dim):
        others = np.ones((n, n), dtype=bool)
        for jj in range(dim):
            if jj != j:
                others &= below[jj]

        upper = np.count_nonzero(others & (U[:, None, j] <= U[None, :, j] + delta), axis=0) / n
        lower = np.count_nonzero(others & (U[:, None, j] <= U[None, :, j] - delta), axis=0) / n
        width = np.minimum(U[:, j] + delta, 1) - np.maximum(U[:, j] - delta, 0)

        deriv = (upper - lower) / width
        outside = (deriv < 0) | (deriv > 1)
        clipped += int(np.count_nonzero(outside))
        deriv = np.clip(deriv, 0, 1)

        Aj = below[j].astype(float)
        E -= deriv[None, :] * (Aj - Aj.mean(axis=0)[None, :])

    if clipped:
        logger.debug("Clipped %d partial derivative estimates to [0, 1]", clipped)

    return E, clipped


def replicate_autocopula(
    series: Series,
    h: int,
    mults: MultiplierSet,
    q: Optional[int] = None,
    delta: Optional[float] = None,
    return_clipped: bool = False,
):
    """
    Multiplier replicates of S_{n,C^(h)}.

    Parameters
    ----------
    series : Series
    h : int
        Embedding dimension
    mults : MultiplierSet
        Multipliers with n = N - h + 1 columns
    q : int, optional
        Pairwise variant, see :func:`stat_autocopula`
    delta : float, optional
        Bandwidth of the partial-derivative estimator, min(n^{-1/2}, 1/2) by
        default
    return_clipped : bool
        Also return the number of clipped partial-derivative estimates

    Returns
    -------
    ndarray of M replicates (and the clip count)
    """
    offsets = _autocopula_offsets(h, q)
    n = check_embedding(series, h)
    _check_multipliers(mults, n)
    _check_length(n)

    E, clipped = autocopula_influence(series.values, n, offsets, delta=delta)
    replicates = cusum_replicates(E, mults.sequences)

    if return_clipped:
        return replicates, clipped
    return replicates


def df_component(series: Series, mults: MultiplierSet) -> ComponentResult:
    """The d test on the first n = mults.n observations"""
    n = mults.n
    return ComponentResult(
        name="d",
        statistic=stat_df(series, n),
        replicates=replicate_df(series, mults, n),
        n=n,
        h=series.N - n + 1,
        seed=mults.seed,
        b_n=mults.b_n,
    )


def dh_component(series: Series, h: int, mults: MultiplierSet) -> ComponentResult:
    return ComponentResult(
        name="dh",
        statistic=stat_dh(series, h),
        replicates=replicate_dh(series, h, mults),
        n=mults.n,
        h=h,
        seed=mults.seed,
        b_n=mults.b_n,
    )


def autocopula_component(
    series: Series, h: int, mults: MultiplierSet, q: Optional[int] = None, delta: Optional[float] = None
) -> ComponentResult:
    """The c test (full embedding) or the c@q test (pairs at lag q - 1)"""
    replicates, clipped = replicate_autocopula(series, h, mults, q=q, delta=delta, return_clipped=True)

    return ComponentResult(
        name="c" if q is None else "c@%d" % q,
        statistic=stat_autocopula(series, h, q=q),
        replicates=replicates,
        n=mults.n,
        h=h,
        seed=mults.seed,
        b_n=mults.b_n,
        diagnostics={"clipped_derivatives": clipped},
    )
