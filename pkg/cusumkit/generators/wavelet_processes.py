"""
Locally stationary wavelet processes
====================================

Haar LSW processes

    X_t = sum_j sum_k sqrt(S_j(k/n)) psi_{j, t-k} xi_{j,k}

with i.i.d. standard normal xi_{j,k} and the discrete non-decimated Haar
wavelets psi_j of length 2^j, equal to +2^{-j/2} on the first half and
-2^{-j/2} on the second (unit norm at every scale). Spectra are evaluated
with periodic boundaries, i.e. at k/n mod 1.
"""

import logging
from typing import Callable, Dict

import numpy as np

from ..analysis.embeddings import Series

logger = logging.getLogger(__name__)

LSW_MODELS = ("A6", "A7", "A8")


def haar_filter(j: int) -> np.ndarray:
    """Non-decimated Haar wavelet at scale j >= 1"""
    if j < 1:
        raise ValueError("Haar scales start at j=1, got %d" % j)

    half = 2 ** (j - 1)
    return np.concatenate([np.ones(half), -np.ones(half)]) * 2 ** (-j / 2)


def _bump(z):
    z = np.mod(z, 1)
    return 0.25 - (z - 0.5) ** 2


def _gauss(z):
    z = np.mod(z, 1)
    return np.exp(-4 * (z - 0.5) ** 2)


def lsw_spectra(model: str) -> Dict[int, Callable]:
    """Non-zero spectra S_j of the models A6, A7 and A8"""
    if model == "A6":
        return {1: _bump}
    if model == "A7":
        return {1: _bump, 2: lambda z: _bump(z + 0.5)}
    if model == "A8":
        return {1: _gauss, 3: lambda z: _gauss(z - 0.25), 4: lambda z: _gauss(z + 0.25)}
    raise ValueError("Unknown LSW model %r, expected one of %s" % (model, ", ".join(LSW_MODELS)))


def _check_length(n):
    if n < 64 or n & (n - 1):
        raise ValueError("LSW processes need a power of two n >= 64, got %d" % n)


def lsw_process(spectra: Dict[int, Callable], n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Simulates a Haar LSW process.

    Parameters
    ----------
    spectra : dict
        Maps a scale j >= 1 to its spectrum S_j (vectorized, non-negative);
        scales not listed have S_j = 0
    n : int
        Length, a power of two >= 64
    rng : numpy.random.Generator

    Returns
    -------
    ndarray of length n
    """
    _check_length(n)

    x = np.zeros(n)
    for j in sorted(spectra):
        psi = haar_filter(j)
        L = psi.shape[0]
        if L > n:
            raise ValueError("Scale %d is too coarse for n=%d" % (j, n))

        # coefficients for k = 2 - L, ..., n
        k = np.arange(2 - L, n + 1)
        S = np.asarray(spectra[j](k / n), dtype=float)
        if (S < 0).any():
            raise ValueError("Spectrum at scale %d takes negative values" % j)

        coefs = np.sqrt(S) * rng.standard_normal(k.shape[0])
        x += np.convolve(coefs, psi, mode="valid")

    return x


def generate_lsw(spec) -> Series:
    """
    Simulates model A6, A7 or A8.

    Parameters
    ----------
    spec : GeneratorSpec
        Uses ``model``, ``n`` and ``seed``

    Returns
    -------
    Series
    """
    spectra = lsw_spectra(spec.model)
    _check_length(spec.n)

    rng = np.random.default_rng(int(spec.seed))
    return Series(lsw_process(spectra, spec.n, rng), name=spec.model)
