import numpy as np
import pandas as pd
from pandas.testing import assert_frame_equal
import pytest

from cusumkit.analysis import stationarity
from cusumkit.experiments.monte_carlo import (
    COLUMNS,
    ExperimentSpec,
    ModelGrid,
    run_experiment,
    series_length,
    substream_seed,
)
from cusumkit.generators.time_series_models import GeneratorSpec, generate


def _spec(**kwargs):
    defaults = dict(
        name="toy",
        models=(ModelGrid("N1", n=(32,)), ModelGrid("D", params=((3.0,),), n=(32,))),
        tests=(("d", 2), ("dc", 2)),
        reps=4,
        replicates=20,
        seed=17,
    )
    defaults.update(kwargs)
    return ExperimentSpec(**defaults)


def test_spec_validation():
    with pytest.raises(ValueError):
        _spec(reps=0)
    with pytest.raises(ValueError):
        _spec(level=1.0)
    with pytest.raises(ValueError):
        _spec(workers=0)
    with pytest.raises(ValueError):
        _spec(tests=())
    with pytest.raises(ValueError):
        _spec(tests=(("dc", 1),))


def test_grid_cells():
    grid = ModelGrid("DS", params=((4.0, 0.7), (2.0, 0.7)), n=(64, 128))
    cells = grid.cells()
    assert [(c.params, c.n) for c in cells] == [((4.0, 0.7), 64), ((4.0, 0.7), 128), ((2.0, 0.7), 64), ((2.0, 0.7), 128)]
    assert _spec().h_max == 2
    assert len(_spec().cells()) == 2


def test_substream_seed():
    assert substream_seed(1, 0, 0, 0) == substream_seed(1, 0, 0, 0)
    seeds = {substream_seed(1, c, r, k) for c in range(3) for r in range(3) for k in range(2)}
    assert len(seeds) == 18
    assert all(0 <= s < 2**64 for s in seeds)


def test_series_length():
    assert series_length(GeneratorSpec("N1", n=128), 3) == (130, 128)
    assert series_length(GeneratorSpec("A6", n=128), 3) == (128, 126)


def test_table_layout():
    result = run_experiment(_spec())
    table = result.table
    assert list(table.columns) == COLUMNS
    assert len(table) == 4
    assert list(table["test"]) == ["d", "dc", "d", "dc"]
    assert list(table["params"]) == ["normal", "normal", "3", "3"]
    assert result.errors == {}
    assert result.reps == 4

    p = table["rejection_pct"] / 100
    assert np.allclose(table["stderr"], 100 * np.sqrt(p * (1 - p) / 4))
    assert table["rejection_pct"].isin([0, 25, 50, 75, 100]).all()


def test_single_repetition_is_all_or_nothing():
    result = run_experiment(_spec(reps=1))
    assert result.table["rejection_pct"].isin([0.0, 100.0]).all()


def test_independent_of_worker_count():
    serial = run_experiment(_spec(workers=1))
    parallel = run_experiment(_spec(workers=3))
    assert_frame_equal(serial.table, parallel.table)


def test_failed_cell_is_recorded():
    spec = _spec(models=(ModelGrid("A6", n=(100,)), ModelGrid("N1", n=(32,))), reps=2)
    result = run_experiment(spec)

    assert list(result.errors) == ["A6||100"]
    assert result.errors["A6||100"].startswith("repetition 0: ValueError")
    failed = result.table[result.table["model"] == "A6"]
    assert failed["rejection_pct"].isna().all()
    assert result.table[result.table["model"] == "N1"]["rejection_pct"].notna().all()


def test_matches_single_series_tests():
    spec = _spec(models=(ModelGrid("D", params=((2.0,),), n=(40,)),), tests=(("d", 2),), reps=5)
    result = run_experiment(spec)

    cell = spec.cells()[0]
    rejections = 0
    for r in range(spec.reps):
        data = generate(GeneratorSpec("D", params=(2.0,), n=41, seed=substream_seed(spec.seed, 0, r, 0)))
        report = stationarity.test_stationarity(
            data, preset="d", h=2, replicates=spec.replicates, seed=substream_seed(spec.seed, 0, r, 1)
        )
        rejections += report.pvalue < spec.level

    assert cell.n == 40
    assert result.table["rejection_pct"].iloc[0] == pytest.approx(100 * rejections / spec.reps)


def test_from_config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(
        "[experiment]\n"
        "name = table1\n"
        "reps = 10\n"
        "replicates = 50\n"
        "seed = 3\n"
        "workers = 2\n"
        "bandwidth = 2\n"
        "output_dir = out\n"
        "\n"
        "[tests]\n"
        "presets = d:2, dc:3, c\n"
        "\n"
        "[model:DS]\n"
        "params = 4, 0.7; 2, 0.7\n"
        "n = 64, 128\n"
        "\n"
        "[model:N1]\n"
        "innovation = normal, t4\n"
    )
    spec = ExperimentSpec.from_config(str(path))

    assert spec.name == "table1"
    assert spec.reps == 10
    assert spec.replicates == 50
    assert spec.seed == 3
    assert spec.workers == 2
    assert spec.bandwidth == 2
    assert spec.output_dir == "out"
    assert spec.tests == (("d", 2), ("dc", 3), ("c", 2))
    assert spec.models[0] == ModelGrid("DS", params=((4.0, 0.7), (2.0, 0.7)), n=(64, 128))
    assert spec.models[1].innovations == ("normal", "t4")
    assert len(spec.cells()) == 6


def test_from_config_errors(tmp_path):
    with pytest.raises(ValueError):
        ExperimentSpec.from_config(str(tmp_path / "missing.ini"))

    path = tmp_path / "bad.ini"
    path.write_text("[experiment]\nreps = 10\n")
    with pytest.raises(ValueError, match="model"):
        ExperimentSpec.from_config(str(path))

    path.write_text("[model:N1]\nn = 64\n")
    with pytest.raises(ValueError, match="experiment"):
        ExperimentSpec.from_config(str(path))


def _rejection(table, model, test, params=None):
    row = table[(table["model"] == model) & (table["test"] == test)]
    if params is not None:
        row = row[row["params"] == params]
    return float(row["rejection_pct"].iloc[0])


@pytest.mark.slow
def test_level_under_iid():
    spec = ExperimentSpec(
        models=(ModelGrid("N1", n=(128,)),), tests=(("d", 2), ("c", 2), ("dc", 2)), reps=1000, seed=1, workers=4
    )
    table = run_experiment(spec).table
    for test in ("d", "c", "dc"):
        assert 1.0 <= _rejection(table, "N1", test) <= 8.0


@pytest.mark.slow
def test_power_against_breaks():
    spec = ExperimentSpec(
        models=(
            ModelGrid("D", params=((3.0,), (2.0,)), n=(128,)),
            ModelGrid("S", params=((0.9,),), n=(128,)),
            ModelGrid("DS", params=((4.0, 0.7),), n=(128,)),
        ),
        tests=(("d", 2), ("c", 2), ("dc", 2), ("dh", 2)),
        reps=1000,
        seed=2,
        workers=4,
    )
    table = run_experiment(spec).table

    assert _rejection(table, "D", "d", "3") == pytest.approx(81.6, abs=6)
    assert _rejection(table, "D", "dc", "3") == pytest.approx(59.2, abs=6)
    assert _rejection(table, "D", "c", "2") <= 6.0
    assert _rejection(table, "S", "c") == pytest.approx(64.2, abs=6)
    assert _rejection(table, "S", "dc") == pytest.approx(62.8, abs=6)
    assert _rejection(table, "DS", "dc") == pytest.approx(92.6, abs=5)
    assert _rejection(table, "S", "dc") >= _rejection(table, "S", "dh") + 25
    for model in ("D", "S", "DS"):
        assert _rejection(table, model, "dh") <= _rejection(table, model, "dc") + 10


@pytest.mark.slow
def test_variance_test_over_rejects_under_garch():
    spec = ExperimentSpec(models=(ModelGrid("N8", n=(256,)),), tests=(("v", 2),), reps=1000, seed=3, workers=4)
    assert 24.0 <= _rejection(run_experiment(spec).table, "N8", "v") <= 40.0


@pytest.mark.slow
def test_autocopula_power_decays_with_h():
    spec = ExperimentSpec(
        models=(ModelGrid("S", params=((0.9,),), n=(128,)),),
        tests=(("c", 2), ("c", 4), ("c", 8)),
        reps=1000,
        seed=4,
        workers=4,
    )
    table = run_experiment(spec).table
    power = table["rejection_pct"].to_numpy()
    assert (np.diff(power) <= 4.0).all()


def test_result_table_is_dataframe():
    assert isinstance(run_experiment(_spec(reps=1)).table, pd.DataFrame)
