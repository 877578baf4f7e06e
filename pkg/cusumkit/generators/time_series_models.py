"""
Simulated time series
=====================

Seeded generators for the stationary and non-stationary models the tests
are studied on.

Stationary models (a burn-in of 100 observations is discarded):

    N1   i.i.d. innovations
    N2   AR(1), 0.9                  N3   AR(1), -0.9
    N4   MA(1), 0.8                  N5   MA(1), -0.8
    N6   ARMA(1, 2), AR -0.4, MA (-0.8, 0.4)
    N7   AR(2), (1.385929, -0.9604)
    N8   GARCH(1,1), (omega, beta, alpha) = (0.012, 0.919, 0.072)
    N9   X_t = (0.8 - 1.1 exp(-50 X_{t-1}^2)) X_{t-1} + 0.1 e_t
    N10  X_t = 0.6 sin(X_{t-1}) + e_t

with standard normal or standardized t4 innovations.

Non-stationary models, X_0 = 0 and i.i.d. standard normal e_t:

    A1   X_t = 1.1 cos(1.5 - cos(4 pi t/n)) e_{t-1} + e_t
    A2   X_t = 0.6 sin(4 pi t/n) X_{t-1} + e_t
    A3   AR(1) with parameter 0.5, switched to -0.5 on the middle half
    A4   AR(1) with parameter -0.5, replaced by 4 e_t on n/64 points after n/2
    A5   AR(1) with parameter moving linearly from 0.9 to -0.9
    A6-A8  Haar LSW processes, see :mod:`cusumkit.generators.wavelet_processes`

Models with a single break after n/2 (parameter beta, or sigma):

    A9   i.i.d. innovations, then AR(1) beta
    A10  i.i.d. innovations, then AR(2) (0, beta)
    A11  same as S(beta)
    A12  i.i.d. standard Frechet, then X_t = max(beta X_{t-1}, (1 - beta) Z_t)
    D    N(0, sigma^2), then N(0, 1)
    S    N(0, 1), then AR(1) beta with N(0, 1 - beta^2) innovations
    DS   N(0, sigma^2), then AR(1) beta with N(0, 1) innovations

The recursions after a break start from the last value before it.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.signal import lfilter, lfiltic

from ..analysis.embeddings import Series
from .wavelet_processes import LSW_MODELS, generate_lsw

logger = logging.getLogger(__name__)

BURN_IN = 100

STATIONARY_MODELS = tuple("N%d" % i for i in range(1, 11))
LOCALLY_STATIONARY_MODELS = ("A1", "A2", "A3", "A4", "A5") + LSW_MODELS
BREAK_MODELS = ("A9", "A10", "A11", "A12", "D", "S", "DS")
MODELS = STATIONARY_MODELS + LOCALLY_STATIONARY_MODELS + BREAK_MODELS

# parameters used when none are given
DEFAULT_PARAMS = {
    "A9": (0.8,),
    "A10": (0.8,),
    "A11": (0.8,),
    "A12": (0.8,),
    "D": (3.0,),
    "S": (0.9,),
    "DS": (4.0, 0.7),
}

# models whose innovation law can be chosen
INNOVATION_MODELS = STATIONARY_MODELS + ("A9", "A10")

INNOVATIONS = ("normal", "t4")

# ARMA filters (b, a) of N2..N7 for scipy.signal.lfilter
ARMA_FILTERS = {
    "N2": ([1.0], [1.0, -0.9]),
    "N3": ([1.0], [1.0, 0.9]),
    "N4": ([1.0, 0.8], [1.0]),
    "N5": ([1.0, -0.8], [1.0]),
    "N6": ([1.0, -0.8, 0.4], [1.0, 0.4]),
    "N7": ([1.0], [1.0, -1.385929, 0.9604]),
}

GARCH_PARAMS = (0.012, 0.919, 0.072)  # omega, beta, alpha


@dataclass(frozen=True)
class GeneratorSpec:
    """
    A model to simulate from.

    Parameters
    ----------
    model : str
        Model identifier, see the module docstring
    params : tuple of float
        (beta,) for A9-A12 and S, (sigma,) for D, (sigma, beta) for DS;
        empty for the others. Defaults from DEFAULT_PARAMS when empty.
    innovation : str
        "normal" or "t4" (Student t4 rescaled to unit variance); only N1-N10,
        A9 and A10 accept "t4"
    n : int
        Length of the series
    seed : int
        Seed of the random stream
    """

    model: str
    params: Tuple[float, ...] = ()
    innovation: str = "normal"
    n: int = 128
    seed: int = 0

    def __post_init__(self):
        innovation = "t4" if self.innovation == "standardized_t4" else self.innovation
        object.__setattr__(self, "innovation", innovation)

        if self.model not in MODELS:
            raise ValueError("Unknown model %r" % (self.model,))
        if innovation not in INNOVATIONS:
            raise ValueError("Unknown innovation law %r, expected normal or t4" % (innovation,))
        if innovation != "normal" and self.model not in INNOVATION_MODELS:
            raise ValueError("Model %s only has normal innovations" % self.model)
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("Series length must be an integer >= 2, got %r" % (self.n,))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("Seed must be a non-negative 64-bit integer, got %r" % (self.seed,))

        params = tuple(float(p) for p in self.params) or DEFAULT_PARAMS.get(self.model, ())
        object.__setattr__(self, "params", params)
        _check_params(self.model, params)

    @property
    def change_point(self) -> Optional[int]:
        """Number of observations before the single break, None without one"""
        return self.n // 2 if self.model in BREAK_MODELS else None

    @property
    def label(self) -> str:
        """Short description used in result tables"""
        label = ",".join("%g" % p for p in self.params)
        if self.model in INNOVATION_MODELS:
            label = ";".join(filter(None, [label, self.innovation]))
        return label


def _check_params(model, params):
    expected = len(DEFAULT_PARAMS.get(model, ()))
    if len(params) != expected:
        raise ValueError("Model %s takes %d parameter(s), got %d" % (model, expected, len(params)))

    if model in ("A9", "A10", "A11", "S"):
        (beta,) = params
        if not -1 < beta < 1:
            raise ValueError("Model %s needs |beta| < 1, got %g" % (model, beta))
    elif model == "A12":
        (beta,) = params
        if not 0 <= beta < 1:
            raise ValueError("Model A12 needs 0 <= beta < 1, got %g" % beta)
    elif model == "D":
        (sigma,) = params
        if not sigma > 0:
            raise ValueError("Model D needs sigma > 0, got %g" % sigma)
    elif model == "DS":
        sigma, beta = params
        if not sigma > 0 or not -1 < beta < 1:
            raise ValueError("Model DS needs sigma > 0 and |beta| < 1, got (%g, %g)" % (sigma, beta))


def innovations(rng, size, law="normal"):
    """i.i.d. innovations with mean 0 and variance 1"""
    if law == "normal":
        return rng.standard_normal(size)
    if law == "t4":
        # Var(t_nu) = nu / (nu - 2)
        return rng.standard_t(4, size) * np.sqrt(0.5)
    raise ValueError("Unknown innovation law %r" % (law,))


def garch(e, omega, beta, alpha):
    """GARCH(1,1) driven by e, started at the stationary variance"""
    x = np.empty_like(e)
    sigma2 = omega / (1 - alpha - beta)

    for t in range(e.shape[0]):
        x[t] = np.sqrt(sigma2) * e[t]
        sigma2 = omega + alpha * x[t] ** 2 + beta * sigma2

    return x


def _autoregression(e, step, x0=0.0):
    x = np.empty_like(e)
    prev = x0
    for t in range(e.shape[0]):
        prev = step(prev, t) + e[t]
        x[t] = prev
    return x


def _stationary(model, n, rng, law):
    e = innovations(rng, n + BURN_IN, law)

    if model == "N1":
        x = e
    elif model in ARMA_FILTERS:
        b, a = ARMA_FILTERS[model]
        x = lfilter(b, a, e)
    elif model == "N8":
        x = garch(e, *GARCH_PARAMS)
    elif model == "N9":
        x = _autoregression(0.1 * e, lambda prev, t: (0.8 - 1.1 * np.exp(-50 * prev**2)) * prev)
    else:
        x = _autoregression(e, lambda prev, t: 0.6 * np.sin(prev))

    return x[BURN_IN:]


def _locally_stationary(model, n, rng):
    e = rng.standard_normal(n + 1)  # e_0, ..., e_n
    t = np.arange(1, n + 1)

    if model == "A1":
        return 1.1 * np.cos(1.5 - np.cos(4 * np.pi * t / n)) * e[:-1] + e[1:]

    if model == "A2":
        coef = 0.6 * np.sin(4 * np.pi * t / n)
    elif model == "A3":
        coef = np.where((t > n // 4) & (t <= 3 * n // 4), -0.5, 0.5)
    elif model == "A5":
        coef = 0.9 - 1.8 * (t - 1) / (n - 1)
    else:
        # X_t = 4 e_t on the burst, the recursion resumes from its last value
        burst = (t > n // 2) & (t <= n // 2 + n // 64)
        coef = np.where(burst, 0.0, -0.5)
        return _autoregression(np.where(burst, 4, 1) * e[1:], lambda prev, i: coef[i] * prev)

    return _autoregression(e[1:], lambda prev, i: coef[i] * prev)


def _ar1_after(x_last, beta, e):
    return lfilter([1.0], [1.0, -beta], e, zi=lfiltic([1.0], [1.0, -beta], [x_last]))[0]


def _with_break(model, params, n, rng, law):
    n1 = n // 2
    n2 = n - n1

    if model == "A12":
        (beta,) = params
        first = 1 / rng.standard_exponential(n1)
        Z = 1 / rng.standard_exponential(n2)
        second = np.empty(n2)
        prev = first[-1] if n1 else 0.0
        for t in range(n2):
            prev = max(beta * prev, (1 - beta) * Z[t])
            second[t] = prev
        return np.concatenate([first, second])

    if model == "D":
        (sigma,) = params
        return np.concatenate([sigma * rng.standard_normal(n1), rng.standard_normal(n2)])

    if model in ("S", "A11"):
        (beta,) = params
        first = rng.standard_normal(n1)
        e = np.sqrt(1 - beta**2) * rng.standard_normal(n2)
        return np.concatenate([first, _ar1_after(first[-1], beta, e)])

    if model == "DS":
        sigma, beta = params
        first = sigma * rng.standard_normal(n1)
        return np.concatenate([first, _ar1_after(first[-1], beta, rng.standard_normal(n2))])

    (beta,) = params
    first = innovations(rng, n1, law)
    e = innovations(rng, n2, law)

    if model == "A9":
        return np.concatenate([first, _ar1_after(first[-1], beta, e)])

    # A10: X_t = beta X_{t-2} + e_t
    b, a = [1.0], [1.0, 0.0, -beta]
    zi = lfiltic(b, a, [first[-1], first[-2] if n1 > 1 else 0.0])
    return np.concatenate([first, lfilter(b, a, e, zi=zi)[0]])


def generate(spec: GeneratorSpec) -> Series:
    """
    Simulates a series from a model.

    Parameters
    ----------
    spec : GeneratorSpec

    Returns
    -------
    Series of length spec.n, identical for identical specs
    """
    if spec.model in LSW_MODELS:
        return generate_lsw(spec)

    rng = np.random.default_rng(int(spec.seed))

    if spec.model in STATIONARY_MODELS:
        x = _stationary(spec.model, spec.n, rng, spec.innovation)
    elif spec.model in LOCALLY_STATIONARY_MODELS:
        x = _locally_stationary(spec.model, spec.n, rng)
    else:
        x = _with_break(spec.model, spec.params, spec.n, rng, spec.innovation)

    return Series(x, name=spec.model)
