import csv
import io
import json

import numpy as np
import pytest

from pride_harvest.attack import DIVISOR_SEARCH, STATUSES
from pride_harvest.experiment import ExperimentConfig, build_world, emit_report, run_experiment
from pride_harvest.roads import ON_ROAD_TOLERANCE, preset_city

SMALL = dict(cities=("nyc", "london"), drivers_per_grid=(5,), runs=2)


@pytest.fixture(scope="module")
def small_report():
    return run_experiment(ExperimentConfig(**SMALL))


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(mode="guess")
    with pytest.raises(ValueError):
        ExperimentConfig(cities=("atlantis",))
    with pytest.raises(ValueError):
        ExperimentConfig(runs=0)
    with pytest.raises(ValueError):
        ExperimentConfig(blinding_range=(0, 10))
    with pytest.raises(ValueError):
        ExperimentConfig(road_file="r.txt")
    with pytest.raises(ValueError):
        ExperimentConfig(forced_secret=(0, 0))


def test_config_from_file(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"cities": ["la"], "drivers_per_grid": [5], "runs": 3}))
    cfg = ExperimentConfig.load(tmp_path / "c.json")
    assert cfg.cities == ("la",) and cfg.drivers_per_grid == (5,) and cfg.runs == 3


def test_build_world():
    grids, roads = preset_city("la")
    world = build_world(grids, roads, 3, np.random.default_rng(0))
    assert len(world.drivers) == 3 * len(grids)
    assert grids.is_interior(grids.locate(world.riders[0]))
    for d in world.drivers.values():
        assert roads.nearest_road_distance(d.location) < ON_ROAD_TOLERANCE


def test_same_seed_same_report(small_report):
    again = run_experiment(ExperimentConfig(**SMALL))
    assert again == small_report
    for fmt in ("table", "delimited", "structured"):
        assert emit_report(again, fmt) == emit_report(small_report, fmt)


def test_workers_do_not_change_results(small_report):
    par = run_experiment(ExperimentConfig(**SMALL, workers=2))
    assert emit_report(par, "structured") == emit_report(small_report, "structured")


def test_seed_changes_results(small_report):
    other = run_experiment(ExperimentConfig(**SMALL, seed=1))
    assert emit_report(other, "structured") != emit_report(small_report, "structured")


def test_identity_blinding_recovers_all_distances():
    rep = run_experiment(ExperimentConfig(cities=("nyc",), drivers_per_grid=(5,), runs=2, forced_secret=(1, 0)))
    tot = rep.totals()
    assert tot.distance_recovered == tot.total > 0
    assert tot.wrong_location == 0


def test_divisor_search_at_least_faithful(small_report):
    div = run_experiment(ExperimentConfig(**SMALL, mode=DIVISOR_SEARCH))
    for a, b in zip(small_report.cells, div.cells):
        assert b.recovered >= a.recovered
    assert div.totals().wrong_location == 0


def test_counts_are_consistent(small_report):
    for c in small_report.cells:
        assert sum(c.statuses.values()) == c.total
        assert c.statuses["recovered"] == c.recovered + c.wrong_location
        assert c.runs == 2 and c.total == 2 * 4 * 5  # four neighbouring cells of five


def test_table_has_twelve_rows():
    rep = run_experiment(ExperimentConfig(runs=1))
    lines = emit_report(rep, "table").splitlines()
    assert len(lines) == 2 + 12
    assert lines[2].startswith("Los Angeles")


def test_structured_and_delimited(small_report, tmp_path):
    doc = json.loads(emit_report(small_report, "structured", tmp_path / "r.json"))
    assert json.loads((tmp_path / "r.json").read_text()) == doc
    assert "workers" not in doc["config"]
    assert doc["totals"]["drivers"] == sum(c["drivers"] for c in doc["cells"])
    for s in STATUSES:
        assert doc["totals"][s] == sum(c[s] for c in doc["cells"])
    rows = list(csv.DictReader(io.StringIO(emit_report(small_report, "delimited"))))
    assert [r["city"] for r in rows] == ["nyc", "london"]
    assert "max_attack_seconds" in emit_report(small_report, "structured", include_timing=True)
    with pytest.raises(ValueError):
        emit_report(small_report, "xml")


def test_custom_city_files(tmp_path):
    grids, roads = preset_city("paris")
    grids.save(tmp_path / "g.json")
    roads.save(tmp_path / "r.txt")
    cfg = ExperimentConfig(road_file=str(tmp_path / "r.txt"), grid_file=str(tmp_path / "g.json"),
                           drivers_per_grid=(5,), runs=1)
    rep = run_experiment(cfg)
    ref = run_experiment(ExperimentConfig(cities=("paris",), drivers_per_grid=(5,), runs=1))
    assert rep.cells[0].city == "custom"
    assert rep.cells[0].statuses == ref.cells[0].statuses
