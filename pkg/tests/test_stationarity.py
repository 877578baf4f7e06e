import time
import warnings

import numpy as np
import pytest
from scipy.stats import kstest

from cusumkit.analysis import stationarity
from cusumkit.analysis.embeddings import Series
from cusumkit.analysis.stationarity import TestOptions, evaluate_presets
from cusumkit.exceptions import DataError


def _iid(n, seed=0):
    return np.random.default_rng(seed).standard_normal(n)


def test_options_validation():
    with pytest.raises(ValueError):
        TestOptions(replicates=0)
    with pytest.raises(ValueError):
        TestOptions(psi="tippett")


def test_ramp_is_rejected():
    report = stationarity.test_stationarity(np.arange(200.0), preset="d", replicates=200, seed=1)
    assert report.pvalue < 0.05


def test_deterministic_given_seed():
    x = _iid(100)
    a = stationarity.test_stationarity(x, preset="dc", h=2, replicates=100, seed=42)
    b = stationarity.test_stationarity(Series(x), TestOptions(preset="dc", h=2, replicates=100, seed=42))
    assert a.to_dict() == b.to_dict()
    assert 0 <= a.pvalue <= 1
    assert [c.name for c in a.components] == ["d", "c"]


def test_report_meta():
    report = stationarity.test_stationarity(_iid(80), preset="dcp", h=3, replicates=50, seed=3)
    meta = report.meta
    assert list(meta) == [
        "preset",
        "h",
        "N",
        "n",
        "M",
        "seed",
        "psi",
        "bandwidth",
        "ties",
        "clipped_derivatives",
        "warnings",
    ]
    assert meta["n"] == 78
    assert meta["N"] == 80
    assert meta["M"] == 50
    assert meta["seed"] == 3
    assert meta["bandwidth"]["mode"] == "auto"
    assert meta["ties"] is False
    assert [c.weight for c in report.components] == [0.5, 0.25, 0.25]


def test_fresh_seed_is_recorded():
    report = stationarity.test_stationarity(_iid(40), preset="d", h=1, replicates=20)
    assert isinstance(report.meta["seed"], int)
    assert 0 <= report.meta["seed"] < 2**64


def test_fixed_bandwidth():
    report = stationarity.test_stationarity(_iid(60), preset="c", h=2, replicates=20, seed=1, bandwidth=3)
    assert report.meta["bandwidth"]["mode"] == "fixed"
    assert report.meta["bandwidth"]["b_n"] == 3


def test_stouffer():
    report = stationarity.test_stationarity(_iid(60), preset="dc", replicates=50, seed=1, psi="stouffer")
    assert report.meta["psi"] == "stouffer"


@pytest.mark.parametrize("preset", ["m", "v", "a", "va", "mva", "dh", "c1"])
def test_all_presets_run(preset):
    report = stationarity.test_stationarity(_iid(60, seed=5), preset=preset, h=2, replicates=30, seed=2)
    assert 0 <= report.pvalue <= 1
    assert report.meta["n"] == 59


def test_short_series():
    with pytest.raises(DataError):
        stationarity.test_stationarity(_iid(3), preset="dc", h=3, replicates=10, seed=1)
    with pytest.raises(DataError):
        stationarity.test_stationarity(_iid(5), preset="va", h=2, replicates=10, seed=1)
    with pytest.raises(ValueError):
        stationarity.test_stationarity(_iid(30), preset="dc", h=1, replicates=10, seed=1)


def test_ties_are_reported():
    x = np.round(_iid(60), 1)
    with pytest.warns(UserWarning, match="tied"):
        report = stationarity.test_stationarity(x, preset="dc", replicates=30, seed=1)
    assert report.meta["ties"] is True
    assert any("tied" in message for message in report.meta["warnings"])

    with pytest.raises(DataError):
        stationarity.test_stationarity(x, preset="dc", replicates=30, seed=1, strict_ties=True)


def test_constant_series():
    with pytest.warns(UserWarning):
        report = stationarity.test_stationarity(np.full(40, 1.5), preset="d", h=1, replicates=20, seed=1)
    assert report.meta["bandwidth"]["fallback"] is True
    assert report.pvalue == 1.0
    assert report.components[0].statistic == 0.0


def test_kurtosis_warning():
    x = _iid(100)
    x[10] = 60.0
    x[70] = -60.0
    with pytest.warns(UserWarning, match="kurtosis"):
        report = stationarity.test_stationarity(x, preset="v", h=2, replicates=30, seed=1)
    assert any("kurtosis" in message for message in report.meta["warnings"])


def test_evaluate_presets_shares_randomness():
    series = Series(_iid(90, seed=9))
    options = TestOptions(replicates=60, seed=11)
    d, dc = evaluate_presets(series, [("d", 2), ("dc", 2)], options)

    assert d.meta["seed"] == dc.meta["seed"] == 11
    assert d.components[0].statistic == dc.components[0].statistic
    assert d.components[0].pvalue == dc.components[0].pvalue

    single = stationarity.test_stationarity(series, options, preset="d", h=2)
    assert single.pvalue == d.pvalue


def test_evaluate_presets_common_length():
    series = Series(_iid(50))
    reports = evaluate_presets(series, [("d", 2), ("c", 4)], TestOptions(replicates=20, seed=1))
    assert [r.meta["n"] for r in reports] == [47, 47]
    assert [r.meta["N"] for r in reports] == [48, 50]

    with pytest.raises(DataError):
        evaluate_presets(series, [("d", 2)], TestOptions(replicates=20, seed=1), n=50)

    assert evaluate_presets(series, [], TestOptions(replicates=20, seed=1)) == []


def test_not_collected_by_pytest():
    assert stationarity.test_stationarity.__test__ is False
    assert TestOptions.__test__ is False


@pytest.mark.slow
def test_pvalues_uniform_under_iid():
    pvalues = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for seed in range(500):
            report = stationarity.test_stationarity(_iid(128, seed), preset="dc", h=2, replicates=250, seed=seed)
            pvalues.append(report.pvalue)

    assert kstest(pvalues, "uniform").statistic < 0.08


@pytest.mark.slow
def test_single_dc_test_is_fast():
    x = _iid(513, seed=3)
    start = time.perf_counter()
    report = stationarity.test_stationarity(x, preset="dc", h=2, replicates=1000, seed=1)
    assert time.perf_counter() - start < 10.0
    assert report.meta["n"] == 512
