import json
import pickle
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from sklearn.ensemble import GradientBoostingClassifier, GradientBoostingRegressor
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

import xtree
from xtree_exporter import ExportError, ExportOptions, export_instances, export_model

DATA = Path(__file__).parent / "data" / "toy.csv"


@pytest.fixture(scope="session")
def toy():
    rows = np.loadtxt(DATA, delimiter=",")
    return rows[:, :3], rows[:, 3].astype(int)


def roundtrip_max_err(doc, scalar_fn, n_probe=1000, seed=0):
    model = xtree.load_model(doc)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-0.5, 1.5, (n_probe, model.n_features))
    expected = scalar_fn(xs)
    got = np.array([xtree.predict(model, x) for x in xs])
    return float(np.max(np.abs(got - expected)))


class TestSingleTrees:
    def test_stump_covers_and_probabilities(self, toy):
        X, y = toy
        est = DecisionTreeClassifier(max_depth=1, random_state=0).fit(X, y)
        doc = export_model(est, ExportOptions(mode="proba", class_id=1))
        tree = doc["trees"][0]
        assert tree["cover"][0] == pytest.approx(100.0)
        assert tree["cover"][1] + tree["cover"][2] == pytest.approx(100.0)
        # leaf probabilities match toolkit introspection
        skt = est.tree_
        for v in (1, 2):
            row = skt.value[v, 0, :]
            assert tree["value"][v] == pytest.approx(row[1] / row.sum(), abs=1e-12)
        assert doc["base_value"] == 0.0
        err = roundtrip_max_err(doc, lambda xs: est.predict_proba(xs)[:, 1])
        assert err <= 1e-9

    def test_depth10_regressor_roundtrip(self, toy):
        X, _ = toy
        target = np.sin(3 * X[:, 0]) + X[:, 1] * X[:, 2]
        est = DecisionTreeRegressor(max_depth=10, random_state=0).fit(X, target)
        doc = export_model(est, ExportOptions(mode="regression"))
        assert roundtrip_max_err(doc, est.predict) <= 1e-9
        xtree.load_model(doc)

    def test_multiclass_per_class_export(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(0, 1, (120, 4))
        y = (X[:, 0] * 3).astype(int).clip(0, 2)
        est = DecisionTreeClassifier(max_depth=4, random_state=0).fit(X, y)
        for c in range(3):
            doc = export_model(est, ExportOptions(mode="proba", class_id=c))
            err = roundtrip_max_err(doc, lambda xs, c=c: est.predict_proba(xs)[:, c])
            assert err <= 1e-9

    def test_class_id_out_of_range(self, toy):
        X, y = toy
        est = DecisionTreeClassifier(max_depth=2, random_state=0).fit(X, y)
        with pytest.raises(ExportError, match="out of range"):
            export_model(est, ExportOptions(mode="proba", class_id=5))

    def test_unfitted_rejected(self):
        with pytest.raises(ExportError):
            export_model(DecisionTreeRegressor(), ExportOptions(mode="regression"))

    def test_unsupported_estimator_rejected(self, toy):
        from sklearn.linear_model import LinearRegression
        X, y = toy
        est = LinearRegression().fit(X, y)
        with pytest.raises(ExportError, match="not a supported tree model"):
            export_model(est, ExportOptions(mode="regression"))


class TestBoosted:
    def test_regression_ensemble_folding(self, toy):
        X, _ = toy
        target = X[:, 0] * 2 - X[:, 1]
        est = GradientBoostingRegressor(n_estimators=5, learning_rate=0.1,
                                        max_depth=3, random_state=0).fit(X, target)
        doc = export_model(est, ExportOptions(mode="regression"))
        assert len(doc["trees"]) == 5
        # base_value is the initial prediction: the training-target mean
        assert doc["base_value"] == pytest.approx(target.mean(), abs=1e-9)
        # leaf values carry the shrinkage factor
        skt = est.estimators_[0, 0].tree_
        leaf = int(np.flatnonzero(skt.children_left < 0)[0])
        assert doc["trees"][0]["value"][leaf] == pytest.approx(
            0.1 * skt.value[leaf, 0, 0], abs=1e-12)
        assert roundtrip_max_err(doc, est.predict) <= 1e-9
        xtree.load_model(doc)

    def test_binary_classifier_logit_both_classes(self, toy):
        X, y = toy
        est = GradientBoostingClassifier(n_estimators=5, learning_rate=0.2,
                                         max_depth=2, random_state=0).fit(X, y)
        doc1 = export_model(est, ExportOptions(mode="logit", class_id=1))
        err1 = roundtrip_max_err(doc1, lambda xs: est.decision_function(xs))
        assert err1 <= 1e-9
        doc0 = export_model(est, ExportOptions(mode="logit", class_id=0))
        err0 = roundtrip_max_err(doc0, lambda xs: -est.decision_function(xs))
        assert err0 <= 1e-9

    def test_multiclass_classifier_logit(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(0, 1, (150, 3))
        y = (X[:, 0] * 3).astype(int).clip(0, 2)
        est = GradientBoostingClassifier(n_estimators=4, learning_rate=0.3,
                                         max_depth=2, random_state=0).fit(X, y)
        for c in range(3):
            doc = export_model(est, ExportOptions(mode="logit", class_id=c))
            err = roundtrip_max_err(
                doc, lambda xs, c=c: est.decision_function(xs)[:, c])
            assert err <= 1e-9
            xtree.load_model(doc)

    def test_folding_required(self, toy):
        X, _ = toy
        est = GradientBoostingRegressor(n_estimators=2, random_state=0).fit(X, X[:, 0])
        with pytest.raises(ExportError, match="folding"):
            export_model(est, ExportOptions(mode="regression", lr_fold=False))


class TestExportInstances:
    def test_basic_csv(self, tmp_path):
        out = tmp_path / "i.csv"
        export_instances(np.arange(6.0).reshape(3, 2), out)
        assert np.loadtxt(out, delimiter=",").shape == (3, 2)

    def test_seeded_subsample_deterministic(self, tmp_path):
        rng = np.random.default_rng(0)
        data = rng.uniform(0, 1, (50, 4))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        export_instances(data, a, sample=10, seed=2025)
        export_instances(data, b, sample=10, seed=2025)
        assert a.read_text() == b.read_text()

    def test_200_row_subsample(self, tmp_path):
        data = np.random.default_rng(1).uniform(0, 1, (100_000, 2))
        out = tmp_path / "s.csv"
        sampled = export_instances(data, out, sample=200, seed=2025)
        assert sampled.shape == (200, 2)
        assert np.loadtxt(out, delimiter=",").shape == (200, 2)

    def test_non_numeric_rejected(self, tmp_path):
        with pytest.raises(ExportError):
            export_instances(np.array([[np.nan, 1.0]]), tmp_path / "x.csv")


class TestCli:
    def test_export_tree_and_validate_through_primary_cli(self, toy, tmp_path):
        X, y = toy
        est = DecisionTreeClassifier(max_depth=3, random_state=0).fit(X, y)
        pkl = tmp_path / "model.pkl"
        pkl.write_bytes(pickle.dumps(est))
        out = tmp_path / "model.json"
        rc = subprocess.run([sys.executable, "-m", "xtree_exporter._cli_shim",
                             "export-tree", "--pickle", str(pkl),
                             "--mode", "proba:1", "--lr-fold", "--out", str(out)])
        assert rc.returncode == 0
        inst = tmp_path / "x.json"
        inst.write_text(json.dumps(X[0].tolist()))
        run = subprocess.run(
            [sys.executable, "-m", "xtree.cli", "explain", "--model", str(out),
             "--instance", str(inst), "--method", "banzhaf"],
            capture_output=True, text=True)
        assert run.returncode == 0, run.stderr
        payload = json.loads(run.stdout)
        assert len(payload["scores"]) == 3

    def test_export_instances_cli(self, tmp_path):
        src = tmp_path / "d.csv"
        np.savetxt(src, np.random.default_rng(2).uniform(0, 1, (30, 3)),
                   delimiter=",")
        out = tmp_path / "sampled.csv"
        rc = subprocess.run([sys.executable, "-m", "xtree_exporter._cli_shim",
                             "export-instances", "--csv", str(src),
                             "--sample", "5", "--seed", "7", "--out", str(out)])
        assert rc.returncode == 0
        assert np.loadtxt(out, delimiter=",").shape == (5, 3)
