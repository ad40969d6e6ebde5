import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from entrank import model
from entrank.model import FEATURES, FeatureMatrix, ModelError, WeightVector
from entrank.synthetic import planted_regression
from oracles import hand_dot

NAN = float("nan")


def matrix_from(raw, keys=None):
    raw = np.asarray(raw, dtype=float)
    keys = keys or [(f"Q{i}", "en") for i in range(len(raw))]
    return FeatureMatrix(keys, raw)


def one_feature(values):
    raw = np.full((len(values), 10), NAN)
    raw[:, 0] = values
    return matrix_from(raw)


def test_log_ratio_example():
    m = model.normalize(one_feature([100.0, 10.0]))
    # natural log here; the ratio is base-independent
    assert m.normalized[:, 0].tolist() == [1.0, pytest.approx(0.5, abs=1e-15)]
    assert m.denominators[0] == pytest.approx(math.log(100))


def test_raw_one_and_below_map_to_zero():
    m = model.normalize(one_feature([1.0, 0.3, 0.0, 50.0]))
    assert m.normalized[:3, 0].tolist() == [0.0, 0.0, 0.0]
    assert m.normalized[3, 0] == 1.0


def test_absent_maps_to_zero_and_all_absent_is_flagged(caplog):
    m = model.normalize(one_feature([NAN, 20.0]))
    assert m.normalized[0, 0] == 0.0
    assert m.normalized[:, 1:].sum() == 0.0
    assert set(m.flagged) == set(FEATURES[1:])
    assert "contributes 0" in caplog.text


def test_new_rows_clip_at_one():
    den = np.array([math.log(10.0)] * 10)
    out = model.apply_normalization(np.full(10, 1000.0), den)
    assert (out == 1.0).all()


raw_values = hnp.arrays(float, st.tuples(st.integers(1, 12), st.just(10)),
                        elements=st.one_of(st.just(NAN), st.floats(0, 1e6)))


@settings(max_examples=100, deadline=None)
@given(raw_values)
def test_normalized_range_and_argmax(raw):
    m = model.normalize(matrix_from(raw))
    assert ((m.normalized >= 0) & (m.normalized <= 1)).all()
    assert (m.normalized[np.isnan(raw)] == 0).all()
    for k in range(10):
        col = np.where(np.isnan(raw[:, k]), -np.inf, raw[:, k])
        if col.max() > 1:
            assert (m.normalized[col == col.max(), k] == 1.0).all()


@settings(max_examples=60, deadline=None)
@given(raw_values, st.floats(1.01, 1e3))
def test_argmax_set_unchanged_by_scaling(raw, c):
    a = model.normalize(matrix_from(raw)).normalized
    b = model.normalize(matrix_from(raw * c)).normalized
    for k in range(10):
        if np.nanmax(np.where(np.isnan(raw[:, k]), -np.inf, raw[:, k])) > 1:
            assert ((a[:, k] == 1.0) == (b[:, k] == 1.0)).all()


def test_duplicate_rows_rejected():
    with pytest.raises(ModelError):
        matrix_from(np.zeros((2, 10)), keys=[("Q1", "en"), ("Q1", "en")])


def labels_of(n):
    return {f"Q{i:02d}": 1 + i % 5 for i in range(n)}


def test_split_ten():
    s = model.split_labels(labels_of(10), seed=42)
    assert (len(s.train), len(s.test)) == (8, 2)
    assert s == model.split_labels(labels_of(10), seed=42)


def test_split_large_scale():
    s = model.split_labels(labels_of(10_969), seed=1)
    assert (len(s.train), len(s.test)) == (8775, 2194)


def test_split_seed_changes_assignment():
    assert model.split_labels(labels_of(50), 1).test != model.split_labels(labels_of(50), 2).test


def test_split_too_few():
    with pytest.raises(ModelError):
        model.split_labels(labels_of(4), seed=0)


@given(st.integers(5, 400), st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_split_invariants(n, seed, frac):
    labels = labels_of(n)
    s = model.split_labels(labels, seed, frac)
    assert not set(s.train) & set(s.test)
    assert set(s.train) | set(s.test) == set(labels)
    assert abs(len(s.train) - frac * n) <= 1


def test_fit_exact_single_feature():
    rng = np.random.default_rng(0)
    y = rng.integers(1, 6, size=50).astype(float)
    coef, b = model.fit_least_squares((y / 5)[:, None], y)
    assert abs(coef[0] - 5) < 1e-6 and abs(b) < 1e-6


def test_fit_planted_weights_noise_free():
    w_star = np.random.default_rng(5).uniform(-2, 2, 10)
    X, y = planted_regression(1000, w_star, intercept=1.5, seed=5)
    coef, b = model.fit_least_squares(X, y)
    assert np.abs(coef - w_star).max() < 1e-6
    assert abs(b - 1.5) < 1e-6


def test_fit_constant_labels():
    X = np.random.default_rng(1).uniform(size=(100, 10))
    coef, b = model.fit_least_squares(X, np.full(100, 3.0))
    assert np.abs(coef).max() < 1e-6 and abs(b - 3) < 1e-6


def test_fit_rank_deficient_is_handled_by_ridge():
    X = np.zeros((20, 3))
    coef, b = model.fit_least_squares(X, np.arange(20.0))
    assert coef.tolist() == [0.0, 0.0, 0.0]
    assert b == pytest.approx(9.5)


def test_fit_non_finite_is_fatal():
    with pytest.raises(ModelError):
        model.fit_least_squares(np.full((5, 2), np.inf), np.ones(5))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_training_residual_never_worse_than_zero_weights(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(60, 10))
    y = rng.integers(1, 6, size=60).astype(float)
    coef, b = model.fit_least_squares(X, y)
    fitted = ((y - (b + X @ coef)) ** 2).sum()
    assert fitted <= ((y - y.mean()) ** 2).sum() + 1e-9


def normalized_matrix(n, seed=0):
    rng = np.random.default_rng(seed)
    raw = np.exp(rng.uniform(0, 5, size=(n, 10)))
    return model.normalize(matrix_from(raw))


def test_train_uses_labeled_rows():
    m = normalized_matrix(40)
    labels = {k: float(3 + 2 * m.normalized[i, 2]) for i, (k, _) in enumerate(m.keys)}
    w = model.train(m, labels, model.split_labels(labels, 0))
    assert w.weights[2] == pytest.approx(2, abs=1e-6) and w.intercept == pytest.approx(3, abs=1e-6)


def test_train_single_column_zeroes_other_weights():
    m = normalized_matrix(40)
    labels = {k: 1 + i % 5 for i, (k, _) in enumerate(m.keys)}
    w = model.train(m, labels, model.split_labels(labels, 0), columns=[4])
    assert np.count_nonzero(w.weights) <= 1


def test_training_row_prefers_english_then_coverage():
    raw = np.full((4, 10), NAN)
    raw[1, :3] = 5.0
    raw[2, :6] = 5.0
    m = matrix_from(raw, keys=[("A", "en"), ("A", "fr"), ("B", "de"), ("B", "fr")])
    assert model.training_rows(m, ["A", "B"]) == [0, 2]
    with pytest.raises(ModelError):
        model.training_rows(m, ["C"])


def test_score_examples():
    assert model.score(WeightVector(np.zeros(10), 0.0), np.random.default_rng(0).uniform(size=10)) == 0.0
    onehot = np.eye(10)[0]
    row = np.zeros(10)
    row[0] = 0.5
    assert model.score(WeightVector(onehot, 0.0), row) == 0.5
    with pytest.raises(ModelError):
        model.score(WeightVector(onehot, 0.0), np.zeros(9))


def test_score_matches_hand_dot_product():
    rng = np.random.default_rng(9)
    for _ in range(20):
        w = WeightVector(rng.uniform(-2, 2, 10), float(rng.uniform(-1, 1)))
        row = rng.uniform(size=10)
        assert abs(model.score(w, row) - hand_dot(w.weights, w.intercept, row)) < 1e-12


unit = st.floats(0, 1)


@given(hnp.arrays(float, 10, elements=st.floats(-3, 3)), st.floats(-3, 3),
       hnp.arrays(float, 10, elements=unit), hnp.arrays(float, 10, elements=unit), unit)
def test_score_is_affine(w, b, r1, r2, a):
    wv = WeightVector(w, b)
    lhs = model.score(wv, a * r1 + (1 - a) * r2)
    rhs = a * model.score(wv, r1) + (1 - a) * model.score(wv, r2)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_weight_vector_length_checked():
    with pytest.raises(ModelError):
        WeightVector(np.zeros(9), 0.0)


def test_assemble_layout(toy_dir):
    from entrank import ingest, kbfeatures, linkgraph

    cat, _ = ingest.parse_pages(toy_dir / "pages.tsv")
    links, _ = ingest.parse_links(toy_dir / "links.tsv", cat)
    cats, _ = ingest.parse_categories(toy_dir / "categories.tsv", cat)
    triples, _ = ingest.parse_triples(toy_dir / "triples.tsv")
    social, _ = ingest.parse_external_scores(toy_dir / "social_scores.tsv")
    wiki = {lang: linkgraph.wiki_features(linkgraph.build_graph(links, cat, lang), cats) for lang in cat.languages}
    rows = kbfeatures.kb_feature_rows(kbfeatures.TripleIndex(triples), social, cat.kb_ids)
    m = model.assemble(cat, wiki, rows)
    assert len(m.keys) == len(cat)
    assert {lang for _, lang in m.keys} == {"en", "es", "fr"}
    multi = [k for k, recs in cat.by_kb_id.items() if len(recs) > 1][0]
    assert len(m.rows_by_kb_id()[multi]) == len(cat.by_kb_id[multi])
    i = m.row_index(multi, "en")
    wf = wiki["en"]
    j = wf.page_ids.tolist().index(cat.get(multi, "en").page_id)
    assert m.raw[i, 0] == pytest.approx(wf.pagerank[j] * wf.node_count)
    no_social = [k for k in cat.kb_ids if rows[k].social_score is None][0]
    assert np.isnan(m.raw[m.rows_by_kb_id()[no_social][0], 9])
    full = [k for k in cat.kb_ids if rows[k].social_score is not None][0]
    assert not np.isnan(m.raw[m.rows_by_kb_id()[full][0]]).any()
