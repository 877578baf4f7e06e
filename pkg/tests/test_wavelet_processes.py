import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
import pytest

from cusumkit.generators.time_series_models import GeneratorSpec, generate
from cusumkit.generators.wavelet_processes import LSW_MODELS, haar_filter, lsw_process, lsw_spectra


def test_haar_filter():
    assert_allclose(haar_filter(1), [1 / np.sqrt(2), -1 / np.sqrt(2)])
    for j in range(1, 7):
        psi = haar_filter(j)
        assert psi.shape == (2**j,)
        assert np.sum(psi**2) == pytest.approx(1.0)
        assert psi.sum() == pytest.approx(0.0)
    with pytest.raises(ValueError):
        haar_filter(0)


def test_zero_spectrum_gives_zero_series():
    rng = np.random.default_rng(0)
    assert_array_equal(lsw_process({1: np.zeros_like, 3: np.zeros_like}, 64, rng), 0.0)
    assert_array_equal(lsw_process({}, 128, rng), 0.0)


def test_length_checks():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        lsw_process({1: np.ones_like}, 100, rng)
    with pytest.raises(ValueError):
        lsw_process({1: np.ones_like}, 32, rng)
    with pytest.raises(ValueError):
        lsw_process({7: np.ones_like}, 64, rng)
    with pytest.raises(ValueError):
        lsw_process({1: lambda z: z - 0.5}, 64, rng)
    with pytest.raises(ValueError):
        generate(GeneratorSpec(model="A6", n=96))


def test_constant_scale_one_autocovariance():
    x = lsw_process({1: np.ones_like}, 2**16, np.random.default_rng(1))
    assert x.var() == pytest.approx(1.0, abs=0.03)
    assert np.mean(x[:-1] * x[1:]) == pytest.approx(-0.5, abs=0.02)
    assert np.mean(x[:-2] * x[2:]) == pytest.approx(0.0, abs=0.02)


def test_spectra():
    assert set(lsw_spectra("A6")) == {1}
    assert set(lsw_spectra("A7")) == {1, 2}
    assert set(lsw_spectra("A8")) == {1, 3, 4}

    z = np.linspace(0, 1, 11)
    bump = lsw_spectra("A6")[1]
    assert_allclose(bump(z), 0.25 - (z % 1 - 0.5) ** 2)
    assert bump(np.array([0.5]))[0] == pytest.approx(0.25)
    # periodic boundaries
    assert_allclose(lsw_spectra("A7")[2](z), bump(z + 0.5))

    with pytest.raises(ValueError):
        lsw_spectra("A9")


@pytest.mark.parametrize("model", LSW_MODELS)
def test_generate_lsw(model):
    spec = GeneratorSpec(model=model, n=128, seed=3)
    a = generate(spec)
    assert a.N == 128
    assert a.name == model
    assert_array_equal(a.values, generate(spec).values)


def test_a6_variance_profile():
    middle = []
    edge = []
    for seed in range(500):
        x = generate(GeneratorSpec(model="A6", n=256, seed=seed)).values
        middle.append(np.mean(x[120:136] ** 2))
        edge.append(np.mean(x[6:20] ** 2))

    assert np.mean(middle) > np.mean(edge)
    assert np.mean(middle) == pytest.approx(0.25, abs=0.03)
