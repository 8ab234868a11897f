"""Text analysis: turn raw document or query text into a normalized token stream.

The same analyzer is shared by indexing, query parsing, and the
term-association machinery, so equal configs always produce equal tokens.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field

__all__ = [
    "AnalyzerConfig",
    "tokenize",
    "fold_arabic",
    "load_stopwords",
]

# Alef variants collapse to bare alef; ta-marbuta and alef-maqsura fold only
# in final position (see fold_arabic).
_ALEF_MAP = str.maketrans({"آ": "ا", "أ": "ا", "إ": "ا"})
_TATWEEL = "ـ"
# Arabic diacritic marks: fathatan..sukun plus the superscript alef.
_DIACRITICS = set("ًٌٍَُِّْٰ")
_TA_MARBUTA = "ة"
_HA = "ه"
_ALEF_MAQSURA = "ى"
_YA = "ي"


@dataclass(frozen=True)
class AnalyzerConfig:
    """Deterministic tokenizer settings.

    Defaults keep the analyzer minimal: lowercase only, no Unicode
    compatibility normalization, no Arabic folding, no stopwords, and no
    length filtering. Same config + same text always gives the same tokens.
    """

    lowercase: bool = True
    unicode_normalization: str = "none"  # "none" or "nfkc"
    arabic_folding: bool = False
    stopwords: frozenset[str] = field(default_factory=frozenset)
    min_token_length: int = 1

    def __post_init__(self) -> None:
        if self.unicode_normalization not in ("none", "nfkc"):
            raise ValueError(
                f"unicode_normalization must be 'none' or 'nfkc', "
                f"got {self.unicode_normalization!r}"
            )
        if self.min_token_length < 1:
            raise ValueError("min_token_length must be >= 1")
        if not isinstance(self.stopwords, frozenset):
            object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def to_json(self) -> str:
        """Canonical JSON form, stable across runs (used as index fingerprint)."""
        return json.dumps(
            {
                "lowercase": self.lowercase,
                "unicode_normalization": self.unicode_normalization,
                "arabic_folding": self.arabic_folding,
                "stopwords": sorted(self.stopwords),
                "min_token_length": self.min_token_length,
            },
            ensure_ascii=False,
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "AnalyzerConfig":
        data = json.loads(text)
        return cls(
            lowercase=data["lowercase"],
            unicode_normalization=data["unicode_normalization"],
            arabic_folding=data["arabic_folding"],
            stopwords=frozenset(data["stopwords"]),
            min_token_length=data["min_token_length"],
        )


def fold_arabic(token: str) -> str:
    """Light orthographic folding for Arabic tokens.

    Maps alef variants to bare alef, removes tatweel and diacritic marks,
    and folds a final ta-marbuta to ha and a final alef-maqsura to ya.
    Identity on non-Arabic text; idempotent.
    """
    out = []
    for ch in token:
        if ch == _TATWEEL or ch in _DIACRITICS:
            continue
        out.append(ch)
    folded = "".join(out).translate(_ALEF_MAP)
    if folded.endswith(_TA_MARBUTA):
        folded = folded[:-1] + _HA
    elif folded.endswith(_ALEF_MAQSURA):
        folded = folded[:-1] + _YA
    return folded


def _is_token_char(ch: str, in_token: bool) -> bool:
    # Letters and digits form tokens; combining marks extend a token already
    # in progress (so diacritized words survive) but never start one.
    if ch.isalnum():
        return True
    return in_token and unicodedata.category(ch) == "Mn"


def _split(text: str) -> list[str]:
    tokens: list[str] = []
    start = -1
    for i, ch in enumerate(text):
        if _is_token_char(ch, start >= 0):
            if start < 0:
                start = i
        elif start >= 0:
            tokens.append(text[start:i])
            start = -1
    if start >= 0:
        tokens.append(text[start:])
    return tokens


def tokenize(text: str, config: AnalyzerConfig | None = None) -> list[str]:
    """Split text into normalized tokens, preserving order and multiplicity.

    Splits on any character that is not a letter or digit, then applies, in
    order: Unicode normalization, lowercasing, Arabic folding, stopword
    removal, and the minimum-length filter, per the config.
    """
    if config is None:
        config = AnalyzerConfig()
    if config.unicode_normalization == "nfkc":
        text = unicodedata.normalize("NFKC", text)
    if config.lowercase:
        text = text.lower()
    tokens = _split(text)
    if config.arabic_folding:
        tokens = [fold_arabic(t) for t in tokens]
        tokens = [t for t in tokens if t]
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    if config.min_token_length > 1:
        tokens = [t for t in tokens if len(t) >= config.min_token_length]
    return tokens


def load_stopwords(path) -> frozenset[str]:
    """Read a stopword list: UTF-8, one token per line, '#' lines ignored."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            words.add(word)
    return frozenset(words)
