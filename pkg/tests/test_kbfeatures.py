import random

from hypothesis import given, settings
from hypothesis import strategies as st

from entrank.ingest import Triple, TripleStore
from entrank.kbfeatures import TripleIndex, kb_feature_rows, object_features, social_score_feature, subject_features
from oracles import nested_loop_kb_features


def store(*rows):
    out = []
    for s, p, o in rows:
        ent = o.startswith("kb:")
        out.append(Triple(s, p, o[3:] if ent else o, ent))
    return TripleStore(tuple(out))


def as_tuples(s: TripleStore):
    return [(t.subject, t.predicate, t.obj, t.obj_is_entity) for t in s.triples]


def test_object_features_example():
    idx = TripleIndex(store(("Q1", "founded_by", "kb:Q2"), ("Q1", "hq_in", "kb:Q3"),
                            ("Q2", "type", "kb:T_person"), ("Q3", "type", "kb:T_city")))
    assert object_features(idx, "Q1") == (2, 2)


def test_literal_objects_do_not_count():
    idx = TripleIndex(store(("Q1", "name", "Apple"), ("Q1", "social_profile", "twitter:apple")))
    assert object_features(idx, "Q1") == (0, 0)


def test_subject_features_example():
    idx = TripleIndex(store(("Q1", "founded_by", "kb:Q2"), ("Q5", "knows", "kb:Q2"),
                            ("Q1", "type", "kb:T_org"), ("Q5", "type", "kb:T_person")))
    assert subject_features(idx, "Q2") == (2, 2)
    assert subject_features(idx, "Q99") == (0, 0)
    assert object_features(idx, "Q99") == (0, 0)


def test_type_triples_do_not_count_as_objects():
    idx = TripleIndex(store(("Q1", "type", "kb:T_person"), ("Q1", "knows", "kb:Q2")))
    assert object_features(idx, "Q1") == (1, 0)


def test_configurable_predicates():
    s = store(("Q1", "instance_of", "kb:T_x"), ("Q2", "rel", "kb:Q1"), ("Q1", "handle", "tw:q1"))
    idx = TripleIndex(s, type_predicate="instance_of", social_predicate="handle")
    assert subject_features(idx, "Q1") == (1, 0)
    assert object_features(idx, "Q2") == (1, 1)
    assert social_score_feature(idx, {"tw:q1": 12.0}, "Q1") == 12.0


def test_distinct_object_flag():
    s = store(("Q1", "a", "kb:Q2"), ("Q1", "b", "kb:Q2"), ("Q1", "c", "kb:Q3"))
    assert object_features(TripleIndex(s), "Q1") == (3, 0)
    assert object_features(TripleIndex(s, distinct_objects=True), "Q1") == (2, 0)


def test_social_score_takes_max():
    idx = TripleIndex(store(("Q1", "social_profile", "twitter:apple"), ("Q1", "social_profile", "facebook:apple")))
    assert social_score_feature(idx, {"twitter:apple": 90.0, "facebook:apple": 70.0}, "Q1") == 90.0


def test_social_score_absent_cases():
    idx = TripleIndex(store(("Q1", "social_profile", "twitter:nobody"), ("Q2", "knows", "kb:Q1")))
    assert social_score_feature(idx, {"twitter:apple": 90.0}, "Q1") is None
    assert social_score_feature(idx, {"twitter:apple": 90.0}, "Q2") is None


def test_rows_mark_unmentioned_entities_absent():
    idx = TripleIndex(store(("Q1", "knows", "kb:Q2")))
    rows = kb_feature_rows(idx, {}, ["Q1", "Q2", "Q3"])
    assert rows["Q1"].object_count == 1 and rows["Q2"].subject_count == 1
    assert rows["Q3"].subject_count is None and rows["Q3"].social_score is None


def random_store(seed, n_triples=200, n_entities=25):
    rnd = random.Random(seed)
    ents = [f"Q{i}" for i in range(n_entities)]
    types = [f"T{i}" for i in range(6)]
    rows = []
    for _ in range(n_triples):
        s = rnd.choice(ents)
        roll = rnd.random()
        if roll < 0.2:
            rows.append((s, "type", "kb:" + rnd.choice(types)))
        elif roll < 0.3:
            rows.append((s, "name", f"lit{rnd.randrange(5)}"))
        else:
            rows.append((s, rnd.choice(["p", "q", "r"]), "kb:" + rnd.choice(ents)))
    return store(*rows), ents


def test_random_200_triple_store_matches_nested_loops():
    s, ents = random_store(11)
    idx = TripleIndex(s)
    for e in ents:
        assert subject_features(idx, e) + object_features(idx, e) == nested_loop_kb_features(as_tuples(s), e)


triple_st = st.tuples(
    st.sampled_from([f"Q{i}" for i in range(8)]),
    st.sampled_from(["type", "p", "q", "name"]),
    st.one_of(st.sampled_from([f"kb:Q{i}" for i in range(8)] + ["kb:T0", "kb:T1"]), st.sampled_from(["lit", "x"])),
)


@settings(max_examples=80, deadline=None)
@given(st.lists(triple_st, max_size=60), st.booleans())
def test_indexed_counts_match_oracle(rows, distinct):
    s = store(*rows)
    idx = TripleIndex(s, distinct_objects=distinct)
    for e in [f"Q{i}" for i in range(8)]:
        got = subject_features(idx, e) + object_features(idx, e)
        assert got == nested_loop_kb_features(as_tuples(s), e, distinct=distinct)


@settings(max_examples=60, deadline=None)
@given(st.lists(triple_st, max_size=40), triple_st)
def test_adding_a_triple_never_decreases_counts(rows, extra):
    before = TripleIndex(store(*rows))
    after = TripleIndex(store(*rows, extra))
    subj, _, obj = extra
    assert object_features(after, subj)[0] >= object_features(before, subj)[0]
    if obj.startswith("kb:"):
        target = obj[3:]
        assert subject_features(after, target)[0] >= subject_features(before, target)[0]


@settings(max_examples=60, deadline=None)
@given(st.lists(triple_st, max_size=40))
def test_type_counts_invariant_under_duplication(rows):
    once, twice = TripleIndex(store(*rows)), TripleIndex(store(*rows, *rows))
    all_types = set().union(*once.types.values()) if once.types else set()
    for e in [f"Q{i}" for i in range(8)]:
        assert subject_features(once, e)[1] == subject_features(twice, e)[1] <= len(all_types)
        assert object_features(once, e)[1] == object_features(twice, e)[1] <= len(all_types)
