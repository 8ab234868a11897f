import random
from fractions import Fraction

import pytest

from prfsweep.evaluation import (IMPROVED, NO_DECISION, NOT_IMPROVED,
                                 QrelsParseError, average_precision, classify,
                                 evaluate_ranking, interpolated_11pt,
                                 metrics_csv_header, parse_qrels,
                                 precision_at_k, write_metrics_csv)


def test_parse_qrels(tmp_path):
    path = tmp_path / "qrels.txt"
    path.write_text("q1 0 d1 1\nq1 0 d3 1\n", encoding="utf-8")
    assert parse_qrels(path) == {"q1": {"d1", "d3"}}


def test_parse_qrels_rel_zero_means_nonrelevant(tmp_path):
    path = tmp_path / "qrels.txt"
    path.write_text("q1 0 d1 0\n", encoding="utf-8")
    assert parse_qrels(path) == {"q1": set()}


def test_parse_qrels_wrong_arity(tmp_path):
    path = tmp_path / "qrels.txt"
    path.write_text("q1 d1 1\n", encoding="utf-8")
    with pytest.raises(QrelsParseError, match="qrels.txt:1"):
        parse_qrels(path)


def test_parse_qrels_bad_relevance(tmp_path):
    path = tmp_path / "qrels.txt"
    path.write_text("q1 0 d1 one\n", encoding="utf-8")
    with pytest.raises(QrelsParseError, match="qrels.txt:1"):
        parse_qrels(path)


def test_parse_qrels_duplicates_collapse(tmp_path):
    path = tmp_path / "qrels.txt"
    path.write_text("q1 0 d1 1\nq1 0 d1 1\n", encoding="utf-8")
    assert parse_qrels(path) == {"q1": {"d1"}}


def test_precision_at_k():
    assert precision_at_k(["d1", "d2", "d3"], {"d1", "d3"}, 5) == 2 / 5
    assert precision_at_k([], {"d1"}, 5) == 0.0
    assert precision_at_k(["d1"], {"d1"}, 1) == 1.0


def test_precision_denominator_is_always_k():
    # two relevant retrieved but k=10: 2/10, not 2/2
    assert precision_at_k(["d1", "d3"], {"d1", "d3"}, 10) == 0.2


def test_average_precision_hand_example():
    # (1/1 + 2/3) / 2
    assert average_precision(["d1", "d2", "d3"], {"d1", "d3"}) == pytest.approx(
        0.8333, abs=1e-4)


def test_average_precision_perfect():
    assert average_precision(["d1", "d2"], {"d1", "d2"}) == 1.0


def test_average_precision_none_retrieved():
    assert average_precision(["d4", "d5"], {"d1"}) == 0.0


def test_average_precision_undefined_without_relevant():
    assert average_precision(["d1"], set()) is None


def test_interpolated_11pt_hand_example():
    curve = interpolated_11pt(["d1", "d2", "d3"], {"d1", "d3"})
    assert curve[:6] == (1.0,) * 6           # recall 0.0 .. 0.5
    assert curve[6:] == (2 / 3,) * 5         # recall 0.6 .. 1.0


def test_interpolated_11pt_perfect_run():
    assert interpolated_11pt(["d1", "d2"], {"d1", "d2"}) == (1.0,) * 11


def test_interpolated_11pt_empty_run():
    assert interpolated_11pt([], {"d1"}) == (0.0,) * 11
    assert interpolated_11pt(["d9"], {"d1"}) == (0.0,) * 11


def test_interpolated_11pt_undefined_without_relevant():
    assert interpolated_11pt(["d1"], set()) is None


def test_curve_non_increasing_property():
    rng = random.Random(3)
    for _ in range(200):
        docs = [f"d{i}" for i in range(rng.randint(1, 30))]
        ranked = rng.sample(docs, rng.randint(0, len(docs)))
        rel = set(rng.sample(docs, rng.randint(1, len(docs))))
        curve = interpolated_11pt(ranked, rel)
        assert all(a >= b for a, b in zip(curve, curve[1:]))


def test_classify_uniform_dominance():
    assert classify([0.5] * 11, [0.6] * 11) == IMPROVED
    assert classify([0.6] * 11, [0.5] * 11) == NOT_IMPROVED


def test_classify_identical_curves():
    assert classify([0.5] * 11, [0.5] * 11) == NO_DECISION


def test_classify_crossing_curves():
    before = [0.5] * 11
    after = [0.9] + [0.5] * 9 + [0.1]  # higher at r=0.0, lower at r=1.0
    assert classify(before, after) == NO_DECISION


def test_classify_single_tie_forces_no_decision():
    before = [0.5] * 11
    after = [0.6] * 10 + [0.5]
    assert classify(before, after) == NO_DECISION


def test_classify_rejects_short_curves():
    with pytest.raises(ValueError):
        classify([0.5] * 10, [0.5] * 11)


# ---------------------------------------------------------------------------
# Naive reference implementations used as metric oracles.

def naive_p_at_k(ranked, rel, k):
    hits = len([d for d in ranked[:k] if d in rel])
    return float(Fraction(hits, k))


def naive_ap(ranked, rel):
    if not rel:
        return None
    precisions = []
    for i in range(1, len(ranked) + 1):
        if ranked[i - 1] in rel:
            precisions.append(len([d for d in ranked[:i] if d in rel]) / i)
    total = 0.0
    for p in precisions:
        total += p
    return total / len(rel)


def naive_11pt(ranked, rel):
    if not rel:
        return None
    measured = []
    for i in range(1, len(ranked) + 1):
        if ranked[i - 1] in rel:
            hits = len([d for d in ranked[:i] if d in rel])
            measured.append((Fraction(hits, len(rel)), hits / i))
    curve = []
    for j in range(11):
        level = Fraction(j, 10)
        candidates = [p for r, p in measured if r >= level]
        curve.append(max(candidates) if candidates else 0.0)
    return tuple(curve)


def random_case(rng):
    universe = [f"d{i}" for i in range(rng.randint(1, 40))]
    ranked = rng.sample(universe, rng.randint(0, len(universe)))
    rel = set(rng.sample(universe, rng.randint(0, len(universe))))
    return ranked, rel


def test_metrics_match_naive_reference():
    rng = random.Random(404)
    for _ in range(300):
        ranked, rel = random_case(rng)
        for k in (1, 3, 5, 10):
            assert precision_at_k(ranked, rel, k) == naive_p_at_k(ranked, rel, k)
        assert average_precision(ranked, rel) == naive_ap(ranked, rel)
        assert interpolated_11pt(ranked, rel) == naive_11pt(ranked, rel)


def test_p_at_k_ignores_tail_reordering():
    rng = random.Random(12)
    for _ in range(50):
        ranked, rel = random_case(rng)
        k = rng.randint(1, 10)
        tail = ranked[k:]
        rng.shuffle(tail)
        assert (precision_at_k(ranked, rel, k)
                == precision_at_k(ranked[:k] + tail, rel, k))


def test_classify_antisymmetry_property():
    rng = random.Random(8)
    for _ in range(300):
        a = [rng.random() for _ in range(11)]
        b = [rng.random() for _ in range(11)]
        forward = classify(a, b)
        backward = classify(b, a)
        assert forward in (IMPROVED, NOT_IMPROVED, NO_DECISION)
        assert (forward == IMPROVED) == (backward == NOT_IMPROVED)
        assert (forward == NOT_IMPROVED) == (backward == IMPROVED)
        assert classify(a, a) == NO_DECISION


def test_evaluate_ranking_bundles_everything():
    metrics = evaluate_ranking(["d1", "d2", "d3"], {"d1", "d3"})
    assert metrics.retrieved == 3
    assert metrics.relevant_retrieved == 2
    assert metrics.p_at[5] == 0.4
    assert metrics.average_precision == pytest.approx(0.8333, abs=1e-4)
    assert metrics.curve11[0] == 1.0


def test_metrics_csv(tmp_path):
    path = tmp_path / "metrics.csv"
    metrics = evaluate_ranking(["d1", "d2"], {"d1"})
    write_metrics_csv(path, {"q1": metrics})
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    assert header == ["qid", "retrieved", "rel_ret", "p5", "p10", "p20",
                      "p100", "p1000", "ap", "r00", "r10", "r20", "r30",
                      "r40", "r50", "r60", "r70", "r80", "r90", "r100"]
    assert metrics_csv_header() == header
    row = lines[1].split(",")
    assert row[0] == "q1"
    assert row[1] == "2"
    assert float(row[8]) == 1.0  # ap: single relevant at rank 1
