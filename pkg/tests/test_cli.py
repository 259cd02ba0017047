import json

from pride_harvest.cli import main


def test_gen_simulate_attack(tmp_path, capsys):
    assert main(["gen-city", "--city", "london", "--out", str(tmp_path / "city")]) == 0
    grid, roads = tmp_path / "city" / "grid.json", tmp_path / "city" / "roads.txt"
    assert grid.exists() and roads.exists()
    t = tmp_path / "t.jsonl"
    truth = tmp_path / "truth.jsonl"
    assert main(["simulate", "--grid", str(grid), "--roads", str(roads), "--seed", "3",
                 "--out", str(t), "--truth", str(truth)]) == 0
    out = tmp_path / "o.jsonl"
    assert main(["attack", "--grid", str(grid), "--roads", str(roads), "--transcript", str(t),
                 "--truth", str(truth), "--mode", "divisor_search", "--out", str(out)]) == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(rows) == 20
    for r in rows:
        if r["status"] == "recovered":
            assert r["recovered"] == r["true"]
    assert "recovered" in capsys.readouterr().err


def test_bench_structured(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"cities": ["la"], "runs": 1}))
    assert main(["bench", "--config", str(cfg), "--drivers-per-grid", "5", "--format", "structured"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [c["city"] for c in doc["cells"]] == ["la"]
    assert doc["config"]["drivers_per_grid"] == [5]


def test_bench_table_to_file(tmp_path):
    out = tmp_path / "t.txt"
    assert main(["bench", "--city", "nyc", "--drivers-per-grid", "5", "--runs", "1", "--out", str(out)]) == 0
    assert "New York City" in out.read_text()


def test_bad_input_exit_code(tmp_path, capsys):
    assert main(["bench", "--city", "atlantis"]) == 2
    assert main(["attack", "--transcript", str(tmp_path / "missing.jsonl")]) == 2
    assert main(["simulate", "--roads", "r.txt"]) == 2
    assert "error:" in capsys.readouterr().err
