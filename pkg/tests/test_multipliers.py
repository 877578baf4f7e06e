import logging

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
import pytest
from scipy.signal import lfilter

from cusumkit.analysis.embeddings import Series
from cusumkit.analysis.multipliers import (
    BandwidthChoice,
    bandwidth_cap,
    generate_multipliers,
    multiplier_autocorrelation,
    multiplier_weights,
    parzen,
    select_bandwidth,
)
from cusumkit.exceptions import DataError


def test_parzen():
    assert parzen(0) == 1.0
    assert parzen(1) == 0.0
    assert parzen(-1) == 0.0
    assert parzen(0.5) == pytest.approx(0.25)
    assert parzen(-0.5) == pytest.approx(0.25)
    assert parzen(3.0) == 0.0
    assert isinstance(parzen(0.2), float)

    x = np.linspace(-1.5, 1.5, 31)
    k = parzen(x)
    assert k.shape == x.shape
    assert_allclose(k, k[::-1])
    assert (k >= 0).all()
    assert (np.diff(k[15:]) <= 0).all()


def test_parzen_continuous_at_half():
    eps = 1e-9
    assert parzen(0.5 - eps) == pytest.approx(parzen(0.5 + eps), abs=1e-7)


@pytest.mark.parametrize("b_n", [1, 2, 4, 7])
def test_multiplier_weights(b_n):
    w = multiplier_weights(b_n)
    assert w.shape == (2 * b_n - 1,)
    assert np.sum(w**2) == pytest.approx(1.0)
    assert_allclose(w, w[::-1])
    assert multiplier_autocorrelation(b_n, 0) == pytest.approx(1.0)
    assert multiplier_autocorrelation(b_n, 2 * b_n - 1) == 0.0
    assert multiplier_autocorrelation(b_n, 5 * b_n) == 0.0


def test_multiplier_weights_errors():
    with pytest.raises(ValueError):
        multiplier_weights(0)
    with pytest.raises(ValueError):
        multiplier_weights(1.5)


def test_bandwidth_choice():
    bw = BandwidthChoice.fixed(3)
    assert bw.mode == "fixed"
    assert bw.ell_n == 5
    assert list(bw.to_dict()) == ["mode", "b_n", "ell_n", "rho1", "significant_lags", "fallback"]
    with pytest.raises(ValueError):
        BandwidthChoice.fixed(0)
    with pytest.raises(ValueError):
        BandwidthChoice(mode="guess", b_n=2)


def test_unit_bandwidth_gives_iid_normals():
    mults = generate_multipliers(20, 3, BandwidthChoice.fixed(1), seed=11)
    assert mults.ell_n == 1
    for m in range(3):
        rng = np.random.default_rng(np.random.SeedSequence(11, spawn_key=(m,)))
        assert_array_equal(mults.sequences[m], rng.standard_normal(20))


def test_multipliers_deterministic():
    bw = BandwidthChoice.fixed(3)
    a = generate_multipliers(50, 5, bw, seed=2**63 + 5)
    b = generate_multipliers(50, 5, bw, seed=2**63 + 5)
    assert_array_equal(a.sequences, b.sequences)
    assert a.M == 5
    assert a.n == 50
    assert not a.sequences.flags.writeable

    # a row only depends on its own substream
    more = generate_multipliers(50, 8, bw, seed=2**63 + 5)
    assert_array_equal(more.sequences[:5], a.sequences)

    other = generate_multipliers(50, 5, bw, seed=2**63 + 6)
    assert not np.allclose(other.sequences, a.sequences)


def test_multiplier_errors():
    with pytest.raises(ValueError):
        generate_multipliers(1, 5, BandwidthChoice.fixed(1), 0)
    with pytest.raises(ValueError):
        generate_multipliers(10, 0, BandwidthChoice.fixed(1), 0)
    with pytest.raises(ValueError):
        generate_multipliers(10, 5, BandwidthChoice.fixed(6), 0)
    with pytest.raises(ValueError):
        generate_multipliers(10, 5, BandwidthChoice.fixed(1), -1)
    with pytest.raises(ValueError):
        generate_multipliers(10, 5, BandwidthChoice.fixed(1), 2**64)


def test_multiplier_autocorrelation_matches_sample():
    b_n = 4
    xi = generate_multipliers(100_000, 1, BandwidthChoice.fixed(b_n), seed=7).sequences[0]
    assert abs(xi.mean()) < 0.03
    assert xi.var() == pytest.approx(1.0, abs=0.03)

    for p in range(0, 2 * b_n):
        sample = np.corrcoef(xi[: xi.shape[0] - p], xi[p:])[0, 1]
        assert sample == pytest.approx(multiplier_autocorrelation(b_n, p), abs=0.03)


def test_bandwidth_cap():
    assert bandwidth_cap(128) == 4
    assert bandwidth_cap(2) == 1
    assert 2 * bandwidth_cap(5) - 1 <= 5


def test_select_bandwidth_iid(rng):
    x = rng.standard_normal(128)
    choice = select_bandwidth(Series(x))
    assert choice.mode == "auto"
    assert 1 <= choice.b_n <= 3
    assert not choice.fallback
    assert choice == select_bandwidth(Series(x.copy()))


def test_select_bandwidth_constant():
    with pytest.warns(UserWarning, match="Constant"):
        choice = select_bandwidth(Series(np.full(50, 2.5)))
    assert choice.b_n == 1
    assert choice.fallback


def test_select_bandwidth_errors():
    with pytest.raises(DataError):
        select_bandwidth(Series(np.arange(7.0)))
    with pytest.raises(ValueError):
        select_bandwidth(Series(np.arange(20.0)), mode="fixed")


def _ar1(beta, n, seed):
    e = np.random.default_rng(seed).standard_normal(n + 100)
    return lfilter([1.0], [1.0, -beta], e)[100:]


def test_select_bandwidth_grows_with_dependence():
    means = []
    for beta in (0.0, 0.3, 0.6, 0.9):
        b = [select_bandwidth(Series(_ar1(beta, 128, seed))).b_n for seed in range(200)]
        means.append(np.mean(b))

    assert (np.diff(means) >= 0).all()
    assert means[-1] > means[0]


def test_select_bandwidth_respects_cap():
    choice = select_bandwidth(Series(_ar1(0.99, 512, 3)))
    assert choice.b_n <= bandwidth_cap(512)
    assert choice.rho1 > 0.5


def test_select_bandwidth_logs_signed_autocorrelation(caplog):
    with caplog.at_level(logging.DEBUG, logger="cusumkit.analysis.multipliers"):
        choice = select_bandwidth(Series(_ar1(-0.8, 256, 4)))

    assert choice.rho1 < -0.5
    assert "rho(1)=%.3f" % choice.rho1 in caplog.text
