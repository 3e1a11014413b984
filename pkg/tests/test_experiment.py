import json

import numpy as np
import pytest

from lipspeak import experiment as ex
from lipspeak.errors import InvalidInputError, StageError


def synth(sigma=1.0, seed=7, **kw):
    return ex.SyntheticConfig(noise_sigma=sigma, seed=seed, **kw)


def config(**kw):
    kw.setdefault("synthetic", synth())
    return ex.ExperimentConfig(**kw)


def test_accuracy_anchors():
    y = np.zeros(168, int)
    assert ex.format_rate(ex.accuracy(np.r_[np.zeros(153), np.ones(15)], y)) == "91.07"
    assert ex.format_rate(ex.accuracy(np.r_[np.zeros(147), np.ones(21)], y)) == "87.50"
    assert ex.format_rate(ex.accuracy(y, y)) == "100.00"


def test_accuracy_errors():
    with pytest.raises(InvalidInputError):
        ex.accuracy([], [])
    with pytest.raises(InvalidInputError):
        ex.accuracy([0, 1], [0])


def test_confusion_matrix():
    cm = ex.confusion_matrix([0, 1, 1, 2], [0, 1, 1, 2], 3)
    np.testing.assert_array_equal(cm, np.diag([1, 2, 1]))
    cm = ex.confusion_matrix([3], [0], 4)
    assert cm[0, 3] == 1 and cm.sum() == 1
    with pytest.raises(InvalidInputError):
        ex.confusion_matrix([4], [0], 4)
    pred, lab = [0, 2, 1, 1, 0], [0, 1, 1, 2, 0]
    assert np.trace(ex.confusion_matrix(pred, lab, 3)) == ex.accuracy(pred, lab) * 5 / 100


def test_stage_seeds_are_independent():
    assert ex.stage_seed(7, "split") == ex.stage_seed(7, "split")
    assert ex.stage_seed(7, "split") != ex.stage_seed(7, "pca/bp/features")
    assert ex.stage_seed(7, "split") != ex.stage_seed(8, "split")
    assert 0 <= ex.stage_seed(2**64 - 1, "x") < 2**63


@pytest.mark.parametrize("features", ex.FEATURE_METHODS)
@pytest.mark.parametrize("classifier", ex.CLASSIFIERS)
def test_separable_corpus_is_perfect(features, classifier):
    report = ex.run_experiment(config(synthetic=synth(0.05), features=features,
                                      classifier=classifier))
    assert report.recognition_rate == 100.0


def test_report_consistency_and_shape():
    report = ex.run_experiment(config(features="ica", classifier="lvq"))
    assert (report.config["train_size"], report.config["test_size"]) == (168, 168)
    cm = report.confusion
    assert 100.0 * np.trace(cm) / cm.sum() == report.recognition_rate
    assert list(cm.sum(axis=1)) == [24] * 7
    d = report.to_dict()
    for key in ("config", "recognition_rate_percent", "correct", "total", "confusion",
                "timings_seconds", "label_mapping"):
        assert key in d
    assert "timings_seconds" not in report.payload()
    assert set(report.timings_seconds) >= {"feature_fit", "classifier_train", "predict"}


def test_rerun_is_byte_identical():
    cfg = config(features="pca", classifier="bp", seed=3)
    a = json.dumps(ex.run_experiment(cfg).payload(), sort_keys=True)
    b = json.dumps(ex.run_experiment(cfg).payload(), sort_keys=True)
    assert a == b


def test_feature_model_sees_training_rows_only():
    cfg = config(features="pca")
    ds = ex.load_dataset(cfg)
    train, _ = ex.make_split(cfg, ds)
    _, pipe = ex.run_experiment(cfg, return_pipeline=True)
    np.testing.assert_array_equal(pipe.feature_model.mean, train.features.mean(axis=0))
    assert not np.allclose(pipe.feature_model.mean, ds.features.mean(axis=0))


def test_bp_backoff_recorded():
    report = ex.run_experiment(config(synthetic=synth(0.05), features="none", classifier="bp"))
    assert report.model_summary["learning_rate"] < ex.REFERENCE_BP["learning_rate"]
    with pytest.raises(StageError, match="diverged"):
        ex.run_experiment(config(synthetic=synth(0.05), features="none", classifier="bp",
                                 paper_params=True))


def test_full_split_tests_on_training_set():
    report = ex.run_experiment(config(paper_split=True))
    assert report.total == 336


@pytest.mark.parametrize("features,classifier",
                         [("pca", "bp"), ("ica", "rbf"), ("none", "lvq"), ("ica", "bp")])
def test_pipeline_save_load_round_trip(tmp_path, features, classifier):
    cfg = config(features=features, classifier=classifier)
    _, pipe = ex.run_experiment(cfg, return_pipeline=True)
    path = tmp_path / "model.json"
    pipe.save(path)
    saved = json.loads(path.read_text())
    assert saved["classifier"]["kind"] == classifier
    assert saved["features"]["kind"] == features
    back = ex.Pipeline.load(path)
    x = ex.load_dataset(cfg).features
    np.testing.assert_array_equal(back.predict(x), pipe.predict(x))
    if classifier != "lvq":
        assert np.array_equal(back.outputs(x), pipe.outputs(x))


def test_missing_files():
    with pytest.raises(StageError, match="absent.csv"):
        ex.run_experiment(ex.ExperimentConfig(data_path="absent.csv"))
    with pytest.raises(FileNotFoundError, match="absent.json"):
        ex.Pipeline.load("absent.json")


def test_config_file(tmp_path):
    p = tmp_path / "s.conf"
    p.write_text("# corpus\nclasses = 3\nper_class_count = 10  # small\n"
                 "noise_sigma = 0.5\nseed = 4\n"
                 "class_mean.0 = 20, 50, 14, 40, 10, 5\n"
                 "class_mean.1 = 24, 60, 16, 50, 12, 6\n"
                 "class_mean.2 = 28, 70, 18, 60, 14, 7\n")
    cfg = ex.SyntheticConfig.from_file(p)
    assert (cfg.num_classes, cfg.per_class_count, cfg.noise_sigma, cfg.seed) == (3, 10, 0.5, 4)
    ds = cfg.generate()
    assert (len(ds), ds.num_classes) == (30, 3)
    p.write_text("colour = blue\n")
    with pytest.raises(InvalidInputError):
        ex.SyntheticConfig.from_file(p)
    p.write_text("no equals sign\n")
    with pytest.raises(InvalidInputError, match="line 1"):
        ex.parse_config_file(p)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        config(components=0)
    with pytest.raises(InvalidInputError):
        config(features="lda")
    with pytest.raises(InvalidInputError):
        ex.ExperimentConfig()


def test_stage_error_names_stage():
    with pytest.raises(StageError) as exc:
        ex.run_experiment(config(components=7))
    assert exc.value.stage == "feature_fit"


def test_compare_layout_and_shared_split():
    table = ex.compare_all(config(synthetic=synth(0.05)))
    assert len(table.cells) == 6
    rows = table.rows(with_timings=False)
    assert rows[0] == ["Methods", "BP", "RBF", "LVQ"]
    assert [r[0] for r in rows[1:]] == ["Recognition Rate with PCA", "Recognition Rate with ICA"]
    assert all(v == "100.00" for r in rows[1:] for v in r[1:])
    totals = {cell.report.total for cell in table.cells.values()}
    assert totals == {168}
    assert table.best.features == "pca" and table.best.classifier == "bp"


def test_compare_records_cell_failures():
    # m = 7 exceeds the 6 geometry features, so every feature fit fails
    table = ex.compare_all(config(synthetic=synth(1.0), components=7))
    assert all(cell.error for cell in table.cells.values())
    assert table.best is None
    assert "failed" in table.render()
