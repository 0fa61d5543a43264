import csv
import hashlib
import json
import subprocess
import sys

import pytest

from eigendroid.cli import main
from eigendroid.datasets import read_dataset


def run(*argv):
    return main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "d.csv"
    assert run("gen", "--features", 12, "--malware", 30, "--benign", 30,
               "--informative", 4, "--delta", 0.3, "--seed", 7, "--output", path) == 0
    return path


def test_train_then_classify_self(tmp_path, small):
    model = tmp_path / "m.json"
    out = tmp_path / "c.csv"
    assert run("train", "--data", small, "--variance", 0.95, "--model", model) == 0
    assert run("classify", "--model", model, "--data", small, "--output", out) == 0
    data = read_dataset(small)
    table = rows(out)
    assert table[0] == ["app_id", "predicted", "score", "nearest_app_id"]
    unique = len({r.tobytes() for r in data.matrix}) == len(data)
    assert unique
    for (app, pred, score, nearest), lab in zip(table[1:], data.labels):
        assert float(score) == 0.0 and pred == lab and nearest == app


def test_nb_train_and_classify(tmp_path, small):
    model = tmp_path / "nb.json"
    out = tmp_path / "c.csv"
    assert run("train", "--data", small, "--algorithm", "nb", "--model", model) == 0
    assert run("classify", "--model", model, "--data", small, "--output", out,
               "--algorithm", "nb") == 0
    assert all(r[3] == "" for r in rows(out)[1:])
    assert run("classify", "--model", model, "--data", small, "--output", out,
               "--algorithm", "eigenspace") == 2


def test_crossval_report_shape(tmp_path, small):
    report = tmp_path / "r.csv"
    mapping = tmp_path / "map.csv"
    assert run("crossval", "--data", small, "--folds", 5, "--variance", 0.95,
               "--seed", 3, "--report", report, "--mapping", mapping) == 0
    table = rows(report)
    assert table[0][:3] == ["fold", "algorithm", "n_components"]
    assert [r[0] for r in table[1:]] == ["1", "2", "3", "4", "5", "mean"]
    assert rows(mapping)[0][0] == "fold"


def test_crossval_with_baseline(tmp_path, small):
    report = tmp_path / "r.csv"
    assert run("crossval", "--data", small, "--baseline", "nb", "--report", report) == 0
    algos = [r[1] for r in rows(report)[1:]]
    assert algos == ["eigenspace"] * 6 + ["nb"] * 6


def test_rank_outputs(tmp_path, small):
    out, reduced = tmp_path / "rank.csv", tmp_path / "red.csv"
    assert run("rank", "--data", small, "--top", 5, "--output", out,
               "--reduced-data", reduced) == 0
    table = rows(out)
    assert table[0] == ["rank", "name", "score"] and len(table) == 6
    assert read_dataset(reduced).feature_names == tuple(r[1] for r in table[1:])


def test_rank_with_catalog(tmp_path):
    from eigendroid.datasets import SyntheticSpec, generate_synthetic, write_dataset
    from eigendroid.features import default_catalog

    cat = default_catalog()
    data = generate_synthetic(SyntheticSpec(n_features=100, n_malware=20, n_benign=20,
                                            informative=10, feature_names=list(cat.names)))
    d, c = tmp_path / "d.csv", tmp_path / "cat.json"
    write_dataset(data, d)
    assert run("catalog", "--output", c) == 0
    red_cat = tmp_path / "red.json"
    assert run("rank", "--data", d, "--catalog", c, "--top", 10, "--output", tmp_path / "r.csv",
               "--reduced-catalog", red_cat) == 0
    doc = json.loads(red_cat.read_text())
    assert len(doc["features"]) == 10 and doc["version"].endswith("+top10")


def test_extract_and_map(tmp_path):
    apps = tmp_path / "apps"
    for i in range(6):
        d = apps / f"app{i}"
        d.mkdir(parents=True)
        if i % 2:
            (d / "manifest.txt").write_text("android.permission.SEND_SMS")
        (d / "code.txt").write_text("chmod 777" if i < 3 else "getDeviceId")
    out = tmp_path / "x.csv"
    assert run("extract", "--input", apps, "--output", out) == 0
    data = read_dataset(out)
    assert len(data) == 6 and data.n_features == 100 and not data.has_labels

    # label and map against a model trained on a synthetic dataset of the same width
    model = tmp_path / "m.json"
    from eigendroid.datasets import SyntheticSpec, generate_synthetic, write_dataset

    train = generate_synthetic(SyntheticSpec(n_features=100, n_malware=60, n_benign=60,
                                             feature_names=list(data.feature_names)))
    write_dataset(train, tmp_path / "t.csv")
    assert run("train", "--data", tmp_path / "t.csv", "--model", model) == 0
    assert run("map", "--model", model, "--data", out, "--output", tmp_path / "map.csv") == 0
    table = rows(tmp_path / "map.csv")
    assert len(table) == 7 and all(r[-1] == "" for r in table[1:])


def test_exit_codes(tmp_path, small):
    assert run("train", "--data", small) == 1  # missing --model
    assert run("bogus") == 1
    assert run("--help") == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("app_id,a,label\nx,7,malware\n")
    assert run("train", "--data", bad, "--model", tmp_path / "m.json") == 2
    assert run("train", "--data", tmp_path / "missing.csv", "--model", tmp_path / "m.json") == 2
    same = tmp_path / "same.csv"
    same.write_text("app_id,a,label\nx,1,malware\ny,1,benign\nz,1,benign\n")
    assert run("train", "--data", same, "--model", tmp_path / "m.json") == 3
    wide = tmp_path / "wide.csv"
    wide.write_text("app_id,a,b,c,label\nx,1,0,0,malware\ny,0,1,1,benign\n")
    assert run("train", "--data", wide, "--model", tmp_path / "m.json") == 3
    assert not (tmp_path / "m.json").exists()
    assert run("train", "--data", small, "--variance", 1.5, "--model", tmp_path / "m.json") == 1


def test_failed_run_leaves_no_partial_output(tmp_path, small):
    target = tmp_path / "model.json"
    target.write_text("previous")
    same = tmp_path / "same.csv"
    same.write_text("app_id,a,label\nx,1,malware\ny,1,benign\n")
    assert run("train", "--data", same, "--model", target) == 3
    assert target.read_text() == "previous"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["d.csv", "model.json", "same.csv"]


def test_inputs_not_mutated(tmp_path, small):
    before = digest(small)
    run("crossval", "--data", small, "--report", tmp_path / "r.csv")
    run("rank", "--data", small, "--output", tmp_path / "k.csv")
    assert digest(small) == before


def test_module_entry_point(tmp_path):
    out = tmp_path / "g.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "eigendroid", "gen", "--features", "3", "--malware", "2",
           "--benign", "2", "--informative", "1", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().startswith("app_id,f001,f002,f003,label\n")
