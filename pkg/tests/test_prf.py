import random

import pytest

from prfsweep.analysis import AnalyzerConfig
from prfsweep.index import Document, InvertedIndex
from prfsweep.prf import (association_matrix, cluster_terms, expand_query,
                          format_clusters, sample_top, trace_expansion,
                          write_trace_csv)
from prfsweep.retrieval import Query


def test_sample_top_prefix():
    ranked = [(0, 2.0), (2, 1.0)]
    assert sample_top(ranked, 1) == [0]
    assert sample_top(ranked, 5) == [0, 2]
    assert sample_top([], 3) == []


def test_sample_top_rejects_bad_d():
    with pytest.raises(ValueError):
        sample_top([(0, 1.0)], 0)


def test_prf_params_bounds():
    from prfsweep.prf import PrfParams

    assert PrfParams(5, 2).d == 5
    with pytest.raises(ValueError):
        PrfParams(0, 1)
    with pytest.raises(ValueError):
        PrfParams(1, 0)


def test_matrix_values_on_micro_corpus(micro_index):
    # D_F = {d1, d2}; hand evaluation of the frequency products
    matrix = association_matrix(micro_index, [0, 1])
    assert matrix.value("sun", "moon") == 2      # 2*1 in d1
    assert matrix.value("moon", "sun") == 2      # symmetry
    assert matrix.value("sun", "star") == 0      # never co-occur
    assert matrix.value("moon", "moon") == 2     # 1^2 + 1^2
    assert matrix.vocabulary == {"sun", "moon", "star"}


def test_matrix_empty_feedback_is_error(micro_index):
    with pytest.raises(ValueError, match="no expansion possible"):
        association_matrix(micro_index, [])


def test_cluster_terms_on_micro_corpus(micro_index):
    matrix = association_matrix(micro_index, [0, 1])
    assert cluster_terms(matrix, "sun", 1) == ["moon"]
    # star is excluded: zero association carries no evidence
    assert cluster_terms(matrix, "sun", 3) == ["moon"]
    assert cluster_terms(matrix, "xyz", 2) == []


def test_cluster_terms_rejects_bad_t(micro_index):
    matrix = association_matrix(micro_index, [0, 1])
    with pytest.raises(ValueError):
        cluster_terms(matrix, "sun", 0)


def test_cluster_tie_break_lexicographic(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    # c and b tie on S(a, .) = 1; order must be lexicographic, not insertion
    (corpus / "doc.txt").write_text("a c b", encoding="utf-8")
    from prfsweep.index import build_index
    index = build_index(corpus)
    matrix = association_matrix(index, [0])
    assert matrix.value("a", "b") == matrix.value("a", "c") == 1
    assert cluster_terms(matrix, "a", 2) == ["b", "c"]


def test_expand_query(micro_index):
    matrix = association_matrix(micro_index, [0, 1])
    expanded = expand_query(Query("q", ("sun",)), matrix, 1)
    assert expanded.terms == ("sun", "moon")
    assert expanded.query_id == "q"


def test_expand_dedups_against_original(micro_index):
    matrix = association_matrix(micro_index, [0, 1])
    expanded = expand_query(Query("q", ("sun", "moon")), matrix, 1)
    assert expanded.terms == ("sun", "moon")


def test_expand_unknown_term_is_noop(micro_index):
    matrix = association_matrix(micro_index, [0, 1])
    q = Query("q", ("xyz",))
    assert expand_query(q, matrix, 5) is q


def test_expansion_order_by_source_then_rank(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "a.txt").write_text("p p p x x y\nq q z", encoding="utf-8")
    from prfsweep.index import build_index
    index = build_index(corpus)
    matrix = association_matrix(index, [0])
    # row p: x(3*2=6) > y(3) > q(6)? q: 3*2=6 ties x at 6 -> lexicographic
    assert cluster_terms(matrix, "p", 3) == ["q", "x", "y"]
    expanded = expand_query(Query("q", ("p", "z")), matrix, 2)
    # p contributes q,x then z contributes its own best neighbours
    assert expanded.terms[:3] == ("p", "z", "q")


def _random_index(rng, max_docs=10, max_vocab=8, max_tf=5):
    config = AnalyzerConfig()
    vocab = [f"t{i}" for i in range(rng.randint(1, max_vocab))]
    n_docs = rng.randint(1, max_docs)
    docs = []
    terms = {}
    doc_tokens = []
    for doc_id in range(n_docs):
        counts = {t: rng.randint(0, max_tf) for t in vocab}
        counts = {t: c for t, c in counts.items() if c}
        length = sum(counts.values())
        docs.append(Document(doc_id, f"d{doc_id}.txt", length))
        doc_tokens.append(counts)
        for term, tf in counts.items():
            terms.setdefault(term, []).append((doc_id, tf))
    for postings in terms.values():
        postings.sort()
    return InvertedIndex(config, docs, terms), doc_tokens


def brute_force_matrix(doc_tokens, feedback):
    """Triple loop over (term, term, doc), straight from the definition."""
    vocab = sorted({t for d in feedback for t in doc_tokens[d]})
    cells = {}
    for u in vocab:
        for v in vocab:
            s = 0
            for d in feedback:
                s += doc_tokens[d].get(u, 0) * doc_tokens[d].get(v, 0)
            cells[(u, v)] = s
    return cells


def test_matrix_equals_brute_force_oracle():
    rng = random.Random(99)
    for _ in range(100):
        index, doc_tokens = _random_index(rng)
        feedback = sorted(rng.sample(range(index.doc_count),
                                     rng.randint(1, index.doc_count)))
        matrix = association_matrix(index, feedback)
        expected = brute_force_matrix(doc_tokens, feedback)
        for (u, v), s in expected.items():
            assert matrix.value(u, v) == s
        # and nothing extra: every stored positive cell is in the oracle
        for u, row in matrix.rows.items():
            for v, s in row.items():
                assert expected[(u, v)] == s


def test_matrix_symmetry_property():
    rng = random.Random(5)
    for _ in range(50):
        index, _ = _random_index(rng)
        feedback = sorted(rng.sample(range(index.doc_count),
                                     rng.randint(1, index.doc_count)))
        matrix = association_matrix(index, feedback)
        for u in matrix.vocabulary:
            for v in matrix.vocabulary:
                assert matrix.value(u, v) == matrix.value(v, u)


def test_row_restriction_matches_full_matrix():
    rng = random.Random(11)
    for _ in range(50):
        index, _ = _random_index(rng)
        feedback = sorted(rng.sample(range(index.doc_count),
                                     rng.randint(1, index.doc_count)))
        full = association_matrix(index, feedback)
        vocab = sorted(full.vocabulary)
        q_terms = tuple(rng.sample(vocab, min(len(vocab), 3))) + ("absent",)
        restricted = association_matrix(index, feedback, row_terms=q_terms)
        t = rng.randint(1, 4)
        for term in q_terms:
            assert (cluster_terms(restricted, term, t)
                    == cluster_terms(full, term, t))
        q = Query("q", q_terms)
        assert (expand_query(q, restricted, t).terms
                == expand_query(q, full, t).terms)


def test_expansion_invariants():
    rng = random.Random(21)
    for _ in range(50):
        index, _ = _random_index(rng)
        feedback = sorted(rng.sample(range(index.doc_count),
                                     rng.randint(1, index.doc_count)))
        matrix = association_matrix(index, feedback)
        vocab = sorted(matrix.vocabulary)
        q_terms = tuple(rng.sample(vocab, min(len(vocab), rng.randint(1, 3))))
        q = Query("q", q_terms)
        t = rng.randint(1, 5)
        expanded = expand_query(q, matrix, t)
        # q is a prefix of q_new, and the size bound holds
        assert expanded.terms[:len(q.terms)] == q.terms
        assert len(expanded.terms) <= len(q.terms) * (t + 1)
        assert len(set(expanded.terms)) == len(expanded.terms)
        # determinism
        assert expand_query(q, matrix, t).terms == expanded.terms


def test_restricted_matrix_refuses_unknown_row(micro_index):
    matrix = association_matrix(micro_index, [0, 1], row_terms=["sun"])
    with pytest.raises(LookupError):
        cluster_terms(matrix, "star", 1)


def test_trace_and_csv(micro_index, tmp_path):
    q = Query("q1", ("sun",))
    feedback = [0, 1]
    matrix = association_matrix(micro_index, feedback, row_terms=q.terms)
    trace = trace_expansion(micro_index, q, feedback, matrix, 1)
    assert trace.feedback_docs == ("d1.txt", "d2.txt")
    assert trace.added_terms == ("moon",)
    assert format_clusters(trace) == "sun -> moon:2"
    path = tmp_path / "trace.csv"
    write_trace_csv(path, [trace])
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "qid,original_terms,feedback_docs,clusters,added_terms,final_terms"
    assert lines[1] == "q1,sun,d1.txt d2.txt,sun -> moon:2,moon,sun moon"
