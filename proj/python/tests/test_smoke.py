import math

import pytest

import abcrm


def test_text_pipeline():
    assert abcrm.porter_stem("interactions") == "interact"
    assert abcrm.tokenize("Protein interactions of lysates") == {"protein": 1, "interact": 1, "lysat": 1}


def test_classify_and_compare_with_naive_bayes():
    corpus = abcrm.generate_synthetic(3, shared_vocab=10, drift_rate=0.05)
    assert corpus.train_count == 40 and corpus.test_count == 40
    features = abcrm.select_features(corpus, k=650)
    assert len(features) <= 650 and features.features[0].rank_product >= 1

    preds = abcrm.classify_stream(corpus, features, abcrm.ParameterSet(), seed=7)
    again = abcrm.classify_stream(corpus, features, abcrm.ParameterSet(), seed=7)
    assert preds == again
    assert len(preds) == corpus.test_count

    report = abcrm.evaluate(preds, corpus)
    nb = abcrm.evaluate(abcrm.naive_bayes(corpus, features), corpus)
    for r in (report, nb):
        assert set(r) == {"precision", "recall", "fscore", "accuracy", "auc", "mcc"}
        assert 0.0 <= r["fscore"] <= 1.0


def test_metrics_and_statistics():
    m = abcrm.basic_metrics(abcrm.Confusion(tp=41, fp=145, tn=387, fn=22))
    assert m["recall"] == pytest.approx(41 / 63)
    t, p = abcrm.paired_ttest([1, 2, 3, 4, 5], [0, 1, 1, 3, 3])
    assert t == pytest.approx(1.4 / math.sqrt(0.06))
    assert p == pytest.approx(0.0046358, abs=1e-6)
    assert abcrm.t_critical(49, 0.01) == pytest.approx(2.68, abs=0.005)


def test_grid_and_experiment():
    assert abcrm.grid_size() == 192500
    assert abcrm.grid_size("1.2") == 7700
    corpus = abcrm.generate_synthetic(5, shared_vocab=10, train_relevant=8, train_irrelevant=8,
                                      test_relevant=8, test_irrelevant=8)
    features = abcrm.select_features(corpus)
    rows = abcrm.run_experiment("3.3", corpus, features, seed=1, replicates=2,
                                axes={"e0": (1, 3, 2), "r0_plus": (5, 5, 1), "r0_minus": (5, 5, 1),
                                      "de": (0.2, 0.2, 0.1), "dr": (0.3, 0.3, 0.1), "na": (4, 4, 2)})
    assert len(rows) == 2
    assert len(rows[0]["seeds"]) == 2
    assert rows[1]["params"].e0 == 3


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        abcrm.ParameterSet(na=3)
    with pytest.raises(ValueError):
        abcrm.grid_size("9.9")
    with pytest.raises(RuntimeError):
        abcrm.load_corpus("/nonexistent/corpus.tsv")
