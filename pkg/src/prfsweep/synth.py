"""Synthetic corpus generator with planted co-occurrence structure.

The generator exists so the whole pipeline can be exercised end to end with
known outcomes. It writes a corpus directory, a queries file, qrels, and a
list of designated "planted" query ids.

Planted queries come in two flavours:

* recall plants (the designated set): the query term appears in exactly five
  "head" documents, each of which also carries the planted expansion term;
  the expansion term additionally appears in every remaining relevant
  document, none of which contain the query term. The initial run can only
  ever find the heads, while the expanded run reaches the rest, so average
  precision must rise once the expansion term is adopted. Inside each head
  the expansion term outnumbers every sampled filler, which makes its
  association score dominate every row prefix: it is picked at any (D, T).

* dominance plants: the query term appears only in non-relevant "bridge"
  documents that carry the expansion term, and the relevant documents are
  reachable only through that term. Before expansion nothing relevant is
  found (an all-zero precision curve), afterwards everything is, which
  yields strict curve improvement. Variants gate the effect on T (a decoy
  term outranks the expansion term) or on D (the first bridge lacks the
  expansion term) so sweep outcomes vary across the grid.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["SynthParams", "SynthSummary", "generate"]


@dataclass(frozen=True)
class SynthParams:
    n_docs: int = 2000
    n_queries: int = 50
    n_planted: int = 12
    n_dominance: int = 6
    vocab_size: int = 4000
    doc_len: tuple[int, int] = (90, 130)
    seed: int = 7

    def __post_init__(self) -> None:
        if self.n_planted < 0 or self.n_dominance < 0:
            raise ValueError("plant counts must be >= 0")
        if self.n_planted + self.n_dominance > self.n_queries:
            raise ValueError("more plants than queries")
        if self.doc_len[0] < 20 or self.doc_len[1] < self.doc_len[0]:
            raise ValueError("bad doc_len range")
        if self.vocab_size < 100:
            raise ValueError("vocab_size must be >= 100")


@dataclass
class SynthSummary:
    corpus_dir: Path
    queries_path: Path
    qrels_path: Path
    planted_path: Path
    n_docs: int
    n_queries: int
    planted_qids: list[str] = field(default_factory=list)


def _draw_fillers(rng: random.Random, fillers: list[str], weights: list[float],
                  n: int) -> list[str]:
    return rng.choices(fillers, weights=weights, k=n)


def _distinct_fillers(rng: random.Random, fillers: list[str], n: int) -> list[str]:
    return rng.sample(fillers, n)


def _doc_text(rng: random.Random, tokens: list[str]) -> str:
    tokens = list(tokens)
    rng.shuffle(tokens)
    lines = [" ".join(tokens[i:i + 12]) for i in range(0, len(tokens), 12)]
    return "\n".join(lines) + "\n"


def _check_prefix_dominance(head_tokens: list[list[str]], key: str, exp: str,
                            min_d: int = 1) -> None:
    """The expansion term must win (or tie, which lexicographic order breaks
    in its favour) every row prefix of the key's association row."""
    scores: Counter = Counter()
    s_exp = 0
    for depth, tokens in enumerate(head_tokens, start=1):
        counts = Counter(tokens)
        tf_key = counts[key]
        for term, tf in counts.items():
            if term in (key, exp):
                continue
            scores[term] += tf_key * tf
        s_exp += counts[key] * counts[exp]
        if depth < min_d:
            continue
        for term, s in scores.items():
            if term.startswith(("key", "exp", "pkey", "pexp", "pdec")):
                continue  # other plants never share documents
            if s > s_exp or (s == s_exp and term < exp):
                raise AssertionError(
                    f"plant violated: {term} beats {exp} at depth {depth}")


def generate(out_dir, params: SynthParams | None = None) -> SynthSummary:
    """Write corpus/, queries.tsv, qrels.txt and planted_queries.txt."""
    if params is None:
        params = SynthParams()
    rng = random.Random(params.seed)
    out = Path(out_dir)
    corpus = out / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)

    fillers = [f"w{i:04d}" for i in range(params.vocab_size)]
    # Mild frequency slope; flat enough that a sampled filler almost never
    # repeats inside one document, which the plant dominance check relies on.
    weights = [2.0 - 1.5 * i / params.vocab_size for i in range(params.vocab_size)]

    docs: list[list[str] | None] = [None] * params.n_docs
    lo, hi = params.doc_len

    # Reserve slots for planted documents up front; remaining slots get
    # filler-only documents.
    plant_doc_budget = 0
    recall_specs = []
    for i in range(params.n_planted):
        n_tails = rng.randint(8, 12)
        recall_specs.append(n_tails)
        plant_doc_budget += 5 + n_tails
    dominance_specs = []
    for i in range(params.n_dominance):
        n_rel = rng.randint(8, 12)
        # kind 0: effective everywhere; kind 1: needs T > #decoys; kind 2:
        # needs D past the exp-less bridges. Deeper gates every third plant;
        # the D gate is capped so dominance stays reachable within 5 bridges.
        kind = i % 3
        gate = min(1 + i // 3, 2) if kind == 2 else 1 + i // 3
        dominance_specs.append((kind, gate, n_rel))
        plant_doc_budget += 5 + n_rel
    if plant_doc_budget > params.n_docs // 2:
        raise ValueError("corpus too small for the requested plants")
    reserved = sorted(rng.sample(range(params.n_docs), plant_doc_budget))
    slot_iter = iter(reserved)

    queries: list[tuple[str, str]] = []
    qrels: dict[str, list[str]] = {}
    planted_qids: list[str] = []
    width = max(4, len(str(params.n_docs - 1)))

    def doc_name(slot: int) -> str:
        return f"d{slot:0{width}d}.txt"

    qid_counter = 0

    def next_qid() -> str:
        nonlocal qid_counter
        qid_counter += 1
        return f"q{qid_counter}"

    # Recall plants: query reaches only the heads; expansion reaches the tails.
    for i, n_tails in enumerate(recall_specs, start=1):
        key = f"key{i:02d}"
        exp = f"exp{i:02d}"
        head_tokens = []
        rel_names = []
        for _ in range(5):
            n = rng.randint(lo, hi)
            tokens = [key] * 3 + [exp] * 2 + _distinct_fillers(rng, fillers, n - 5)
            head_tokens.append(tokens)
            slot = next(slot_iter)
            docs[slot] = tokens
            rel_names.append(doc_name(slot))
        for _ in range(n_tails):
            n = rng.randint(lo, hi)
            tokens = [exp] * 2 + _distinct_fillers(rng, fillers, n - 2)
            slot = next(slot_iter)
            docs[slot] = tokens
            rel_names.append(doc_name(slot))
        _check_prefix_dominance(head_tokens, key, exp)
        qid = next_qid()
        queries.append((qid, key))
        qrels[qid] = rel_names
        planted_qids.append(qid)

    # Dominance plants: nothing relevant before expansion, everything after.
    for i, (kind, gate, n_rel) in enumerate(dominance_specs, start=1):
        key = f"pkey{i:02d}"
        exp = f"pexp{i:02d}"
        decoys = [f"pdec{i:02d}{chr(ord('a') + j)}" for j in range(gate)]
        bridge_len = rng.randint(lo, hi)
        bridge_tokens = []
        for j in range(5):
            extras = [key] * 3
            if kind == 1:
                for decoy in decoys:
                    extras += [decoy] * 3
            if not (kind == 2 and j < gate):
                extras += [exp] * 2
            if len(extras) + 10 > bridge_len:
                raise ValueError("doc_len too small for the plant structure")
            tokens = extras + _distinct_fillers(rng, fillers,
                                                bridge_len - len(extras))
            bridge_tokens.append(tokens)
            docs[next(slot_iter)] = tokens
        rel_names = []
        for _ in range(n_rel):
            n = rng.randint(lo, hi)
            tokens = [exp] * 2 + _distinct_fillers(rng, fillers, n - 2)
            slot = next(slot_iter)
            docs[slot] = tokens
            rel_names.append(doc_name(slot))
        # Bridges share tf and length, so the initial ranking ties on score
        # and falls back to doc_id: generation order is rank order. The
        # D-gated kind only guarantees dominance once enough exp-bearing
        # bridges are inside the prefix to outweigh accumulated fillers.
        _check_prefix_dominance(bridge_tokens, key, exp,
                                min_d=2 * gate if kind == 2 else 1)
        qid = next_qid()
        queries.append((qid, key))
        qrels[qid] = rel_names

    # Filler documents for the remaining slots.
    for slot in range(params.n_docs):
        if docs[slot] is None:
            n = rng.randint(lo, hi)
            docs[slot] = _draw_fillers(rng, fillers, weights, n)

    # Natural queries over filler terms with useful document frequency.
    doc_sets: dict[str, set[int]] = {}
    for slot, tokens in enumerate(docs):
        for term in set(tokens):
            doc_sets.setdefault(term, set()).add(slot)
    candidates = [w for w in fillers if len(doc_sets.get(w, ())) >= 3]
    while qid_counter < params.n_queries:
        terms = rng.sample(candidates, 2)
        pool = sorted(doc_sets[terms[0]] | doc_sets[terms[1]])
        n_rel = min(len(pool), rng.randint(4, 15))
        rel_slots = rng.sample(pool, n_rel)
        if rng.random() < 0.3:
            extra = rng.sample(range(params.n_docs), rng.randint(1, 2))
            rel_slots = sorted(set(rel_slots) | set(extra))
        qid = next_qid()
        queries.append((qid, " ".join(terms)))
        qrels[qid] = [doc_name(s) for s in sorted(set(rel_slots))]

    for slot, tokens in enumerate(docs):
        (corpus / doc_name(slot)).write_text(_doc_text(rng, tokens),
                                             encoding="utf-8")

    queries_path = out / "queries.tsv"
    with open(queries_path, "w", encoding="utf-8") as fh:
        fh.write("# synthetic queries: qid<TAB>text\n")
        for qid, text in queries:
            fh.write(f"{qid}\t{text}\n")

    qrels_path = out / "qrels.txt"
    with open(qrels_path, "w", encoding="utf-8") as fh:
        for qid, _ in queries:
            for name in sorted(qrels[qid]):
                fh.write(f"{qid} 0 {name} 1\n")

    planted_path = out / "planted_queries.txt"
    with open(planted_path, "w", encoding="utf-8") as fh:
        fh.write("# queries with a planted expansion term\n")
        for qid in planted_qids:
            fh.write(qid + "\n")

    return SynthSummary(
        corpus_dir=corpus, queries_path=queries_path, qrels_path=qrels_path,
        planted_path=planted_path, n_docs=params.n_docs,
        n_queries=len(queries), planted_qids=planted_qids)
