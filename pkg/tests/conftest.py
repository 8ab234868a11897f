import pytest

from prfsweep.index import build_index


@pytest.fixture
def micro_corpus(tmp_path):
    """Three tiny documents: d1='sun moon sun', d2='moon star',
    d3='sun comet comet'. Doc ids by filename order: d1=0, d2=1, d3=2."""
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "d1.txt").write_text("sun moon sun", encoding="utf-8")
    (corpus / "d2.txt").write_text("moon star", encoding="utf-8")
    (corpus / "d3.txt").write_text("sun comet comet", encoding="utf-8")
    return corpus


@pytest.fixture
def micro_index(micro_corpus):
    return build_index(micro_corpus)
