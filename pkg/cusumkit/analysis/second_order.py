"""
Second-order CUSUM statistics
=============================

Tests for changes in the mean (``m``), the variance (``v``) and the lag q - 1
autocovariance (``a@q``) built on order-2 U-statistics of

    Z_i = X_i                 (mean, variance)
    Z_i = (X_i, X_{i+q-1})    (autocovariance)

with the symmetric kernels

    m(z, z') = (z + z') / 2
    v(z, z') = (z - z')^2 / 2
    a(z, z') = (z_1 - z_1') (z_2 - z_2') / 2.

All three reduce to closed forms in segment sums: the segment mean, and
(m sum a_i b_i - sum a_i sum b_i) / (m (m - 1)) with a = b for the variance.
The statistics evaluate them for every split point from prefix sums of the
centred data.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingConfig, Series, check_embedding
from .multipliers import MultiplierSet
from .rank_statistics import ComponentResult

logger = logging.getLogger(__name__)

KERNELS = ("mean", "variance", "autocov")


@dataclass(frozen=True)
class KernelSpec:
    """
    Kernel of a second-order U-statistic.

    Parameters
    ----------
    kind : str
        "mean", "variance" or "autocov"
    q : int
        1 for mean and variance; the autocovariance at lag q - 1 uses q >= 2
    """

    kind: str
    q: int = 1

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError("Unknown kernel %r, expected one of %s" % (self.kind, ", ".join(KERNELS)))
        if (self.kind == "autocov") != (self.q >= 2):
            raise ValueError("Kernel %r is incompatible with q=%r" % (self.kind, self.q))

    @property
    def name(self) -> str:
        if self.kind == "autocov":
            return "a@%d" % self.q
        return self.kind[0]


def kernel_coordinates(x, n, kernel):
    """The two coordinate arrays (a, b) of Z_1..Z_n the kernel multiplies"""
    x = np.asarray(x, dtype=float)
    if kernel.kind == "autocov":
        return x[:n], x[kernel.q - 1 : kernel.q - 1 + n]
    return x[:n], x[:n]


def ustat(series: Series, cfg: EmbeddingConfig, k: int, l: int, kernel: KernelSpec) -> float:
    """
    U-statistic U_{k:l,q,phi} over the points Z_k, ..., Z_l (1-based, inclusive).

    Parameters
    ----------
    series : Series
    cfg : EmbeddingConfig
        Sets n = N - h + 1; the kernel lag q must not exceed h
    k, l : int
        Segment bounds with 1 <= k < l <= n
    kernel : KernelSpec

    Returns
    -------
    binom(l-k+1, 2)^{-1} sum_{k <= i < j <= l} phi(Z_i, Z_j)
    """
    n = check_embedding(series, cfg.h)
    if kernel.q > cfg.h:
        raise ValueError("Kernel lag q=%d exceeds the embedding dimension h=%d" % (kernel.q, cfg.h))
    if l - k < 1:
        raise ValueError("A U-statistic segment needs at least 2 points, got k=%d, l=%d" % (k, l))
    if not (1 <= k and l <= n):
        raise ValueError("Segment bounds must satisfy 1 <= k < l <= n=%d, got k=%d, l=%d" % (n, k, l))

    a, b = kernel_coordinates(series.values, n, kernel)
    a = a[k - 1 : l]
    b = b[k - 1 : l]

    if kernel.kind == "mean":
        return float(np.mean(a))

    return float(np.dot(a - a.mean(), b - b.mean()) / (a.shape[0] - 1))


def _segment_ustats(a, b, kind):
    """U_{1:k} and U_{k+1:n} for k = 2..n-2 from prefix sums"""
    n = a.shape[0]
    k = np.arange(2, n - 1)

    Sa = np.concatenate([[0.0], np.cumsum(a)])
    Sb = np.concatenate([[0.0], np.cumsum(b)])
    Sab = np.concatenate([[0.0], np.cumsum(a * b)])

    def segment(lo, hi):
        m = hi - lo
        sa = Sa[hi] - Sa[lo]
        if kind == "mean":
            return sa / m
        sb = Sb[hi] - Sb[lo]
        sab = Sab[hi] - Sab[lo]
        return (m * sab - sa * sb) / (m * (m - 1))

    return segment(0, k), segment(k, n)


def _check_second_order(series, h, kernel):
    n = check_embedding(series, h)
    if kernel.q > h:
        raise ValueError("Kernel lag q=%d exceeds the embedding dimension h=%d" % (kernel.q, h))
    if n < 5:
        raise ValueError("Second-order statistics need n >= 5 points, got %d" % n)
    return n


def stat_u(series: Series, h: int, kernel: KernelSpec) -> float:
    """
    CUSUM statistic S_{n,q,phi} of the second-order test.

    Returns
    -------
    max_{2 <= k <= n-2} | sqrt(n) (k/n) ((n-k)/n) (U_{1:k} - U_{k+1:n}) |
    with n = N - h + 1.
    """
    n = _check_second_order(series, h, kernel)
    a, b = kernel_coordinates(series.values, n, kernel)

    # centring leaves the differences of segment statistics unchanged
    a = a - a.mean()
    b = b - b.mean()

    left, right = _segment_ustats(a, b, kernel.kind)
    k = np.arange(2, n - 1)

    return float(np.max(np.abs(np.sqrt(n) * (k / n) * ((n - k) / n) * (left - right))))


def first_order_projection(x, n, kernel):
    """
    phi_hat(Z_i) = (n-1)^{-1} sum_{j != i} phi(Z_i, Z_j) - U_{1:n}, i = 1..n.

    The values sum to zero.
    """
    a, b = kernel_coordinates(x, n, kernel)

    if kernel.kind == "mean":
        S = a.sum()
        return (a + (S - a) / (n - 1)) / 2 - S / n

    a = a - a.mean()
    b = b - b.mean()
    Sa, Sb, Sab = a.sum(), b.sum(), np.dot(a, b)

    U = (n * Sab - Sa * Sb) / (n * (n - 1))
    return (n * a * b - a * Sb - b * Sa + Sab) / (2 * (n - 1)) - U


def replicate_u(series: Series, h: int, kernel: KernelSpec, mults: MultiplierSet) -> np.ndarray:
    """
    Multiplier replicates of S_{n,q,phi}.

    Uhat^[m](k/n) = (2/sqrt(n)) [ sum_{i<=k} xi_i phi_hat(Z_i) - (k/n) sum_i xi_i phi_hat(Z_i) ]
    and the replicate is its maximal absolute value over k = 2..n-2.
    """
    n = _check_second_order(series, h, kernel)
    if mults.n != n:
        raise ValueError("Multiplier set has %d columns, the statistic needs %d" % (mults.n, n))

    phi = first_order_projection(series.values, n, kernel)

    partial = np.cumsum(mults.sequences * phi[None, :], axis=1)
    k = np.arange(2, n - 1)
    Uhat = 2 / np.sqrt(n) * (partial[:, k - 1] - (k / n)[None, :] * partial[:, -1:])

    return np.max(np.abs(Uhat), axis=1)


def u_component(series: Series, h: int, kernel: KernelSpec, mults: MultiplierSet) -> ComponentResult:
    return ComponentResult(
        name=kernel.name,
        statistic=stat_u(series, h, kernel),
        replicates=replicate_u(series, h, kernel, mults),
        n=mults.n,
        h=h,
        seed=mults.seed,
        b_n=mults.b_n,
    )
