import json

import pytest

from cadfs.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_RUNTIME, main

from .conftest import DATA_DIR

QUICK = ["--generations", "3", "--population", "6"]


@pytest.fixture(autouse=True)
def data_dir(monkeypatch):
    monkeypatch.setenv("CADFS_DATA_DIR", str(DATA_DIR))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_ingest_summary(capsys):
    code, out, _ = run(capsys, "ingest")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "303 instances, 6 with missing values"
    assert lines[1] == "classes: 164 negative, 139 positive"
    assert "missing ca: 4" in lines and "missing thal: 2" in lines


def test_ingest_drop(capsys):
    code, out, _ = run(capsys, "ingest", "--impute", "drop")
    assert code == EXIT_OK
    assert "after dropping incomplete rows: 297 instances" in out


def test_ingest_empty_file(capsys, tmp_path):
    empty = tmp_path / "empty.data"
    empty.write_text("")
    code, _, err = run(capsys, "ingest", "--dataset", str(empty))
    assert code == EXIT_DATA
    assert "data error" in err


def test_ingest_reports_line_number(capsys, tmp_path):
    bad = tmp_path / "bad.data"
    bad.write_text((DATA_DIR / "processed.cleveland.data").read_text().replace("150.0", "x", 1))
    code, _, err = run(capsys, "ingest", "--dataset", str(bad))
    assert code == EXIT_DATA
    assert "line 1" in err


def test_ingest_canonical_round_trip(capsys, tmp_path):
    target = tmp_path / "cleveland.csv"
    _, first, _ = run(capsys, "ingest", "--out", str(target))
    assert (tmp_path / "cleveland.csv.schema").exists()
    code, second, _ = run(capsys, "ingest", "--dataset", str(target))
    assert code == EXIT_OK
    assert second == first


def test_missing_dataset(capsys, tmp_path):
    code, _, err = run(capsys, "ingest", "--dataset", str(tmp_path / "nope.data"))
    assert code == EXIT_DATA


def test_select_json(capsys):
    code, out, _ = run(capsys, "select", "--wrapper", "ga", "--classifier", "nb", "--seed", "7", *QUICK)
    assert code == EXIT_OK
    report = json.loads(out)
    assert len(report["mask"]) == 13 and set(report["mask"]) <= {"0", "1"}
    assert report["config"]["seed"] == 7
    assert report["config"]["ga"]["population_size"] == 6
    assert report["selected_features"]


def test_select_byte_identical_files(capsys, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["select", "--seed", "7", "--out", str(p), *QUICK]) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.parametrize("fmt", ["table", "csv"])
def test_select_other_formats(capsys, fmt):
    code, out, _ = run(capsys, "select", "--wrapper", "sffs", "--format", fmt)
    assert code == EXIT_OK
    assert out.startswith("# config: ")


def test_population_zero(capsys):
    code, _, err = run(capsys, "select", "--population", "0")
    assert code == EXIT_CONFIG
    assert "population_size" in err


def test_all_violations_listed(capsys):
    code, _, err = run(capsys, "select", "--population", "0", "--mutation", "2", "--svm-c", "-1")
    assert code == EXIT_CONFIG
    assert "population_size" in err and "mutation_prob" in err and "svm C" in err


def test_bench_single_cell(capsys):
    code, out, err = run(capsys, "bench", "--cells", "ga:nb", "--seeds", "0", *QUICK)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1].split() == ["Wrapper", "Algorithms", "BN"]
    assert len(lines) == 3 and lines[2].startswith("GA wrapper")
    assert "ga:nb" in err  # wall-clock line


def test_bench_table_header_full_grid(capsys):
    code, out, _ = run(capsys, "bench", "--wrapper", "none", "--seeds", "0", "--mlp-epochs", "5")
    assert code == EXIT_OK
    assert out.splitlines()[1].split() == ["Wrapper", "Algorithms", "BN", "SVM", "MLP", "C4.5"]


def test_bench_csv_rows(capsys):
    code, out, _ = run(capsys, "bench", "--cells", "none:nb,none:c45", "--seeds", "0,1", "--format", "csv")
    assert code == EXIT_OK
    rows = [r for r in out.splitlines() if not r.startswith("#")]
    assert len(rows) == 1 + 2 * 2 * 10


def test_bench_json_embeds_config(capsys):
    code, out, _ = run(capsys, "bench", "--cells", "bfs:nb", "--seeds", "3", "--format", "json")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["seeds"] == [3]
    assert report["config"]["command"] == "bench"


def test_bench_bad_cell(capsys):
    code, _, err = run(capsys, "bench", "--cells", "ga:knn")
    assert code == EXIT_CONFIG
    assert "ga:knn" in err


def test_bench_failed_cell_exit(capsys):
    # 200 folds cannot be stratified with 139 positives, so the cell fails at run time
    code, out, err = run(capsys, "bench", "--cells", "none:nb", "--seeds", "0", "--folds", "200")
    assert code == EXIT_RUNTIME
    assert "failed" in out.splitlines()[-1]
    assert "none:nb failed" in err


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.conf"
    cfg.write_text("# quick run\nwrapper = sffs\nseed = 4\nfitness-folds = 3\n")
    code, out, _ = run(capsys, "select", "--config", str(cfg))
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["wrapper"] == "sffs" and report["config"]["seed"] == 4
    assert report["config"]["budget"]["fitness_folds"] == 3
    code, out, _ = run(capsys, "select", "--config", str(cfg), "--seed", "9")
    assert json.loads(out)["config"]["seed"] == 9


@pytest.mark.parametrize("text", ["colour = red\n", "wrapper = annealing\n", "just words\n"])
def test_config_file_errors(capsys, tmp_path, text):
    cfg = tmp_path / "bad.conf"
    cfg.write_text(text)
    code, _, _ = run(capsys, "select", "--config", str(cfg))
    assert code == EXIT_CONFIG


def test_unknown_flag(capsys):
    code, _, _ = run(capsys, "select", "--bogus")
    assert code == EXIT_CONFIG
