"""Evaluation metrics and the deterministic embedding provider.

Similarity uses a TF-IDF embedding over word unigrams and bigrams with L2
normalization; it is deterministic and dependency-free, and an optional
remote provider with the same interface can stand in when configured.
The remaining metrics: E-score (percent of word tokens touching a forbidden
letter), OOV rate against a configured dictionary, grammar mistakes via a
pluggable checker, and Flesch Reading Ease for readability.
"""

from __future__ import annotations

import json
import math
import re
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .textcore import ConstraintSet, canonical, tokenize, violates

Feature = str


def text_features(text: str) -> Counter:
    """Term frequencies of canonical word unigrams and adjacent bigrams."""
    words = [canonical(w) for w in tokenize(text).words()]
    feats = Counter(words)
    feats.update(" ".join(pair) for pair in zip(words, words[1:]))
    return feats


@dataclass(frozen=True)
class IdfTable:
    """Inverse document frequencies over a reference corpus.

    idf = ln((N+1)/(df+1)) + 1 where N is the document count; features
    never seen in the reference corpus get the df=0 value.
    """

    values: Mapping[Feature, float]
    n_documents: int
    default: float

    def value(self, feature: Feature) -> float:
        return self.values.get(feature, self.default)


def build_idf(documents: Iterable[str]) -> IdfTable:
    """One document per entry; blank documents still count toward N."""
    df: Counter = Counter()
    n = 0
    for doc in documents:
        n += 1
        df.update(set(text_features(doc)))
    values = {
        feat: math.log((n + 1) / (count + 1)) + 1.0 for feat, count in df.items()
    }
    return IdfTable(values, n, math.log(n + 1) + 1.0)


@dataclass(frozen=True)
class EmbeddingVector:
    """Sparse L2-normalized feature weights; norm is 1.0, or 0.0 when empty."""

    weights: Mapping[Feature, float]
    norm: float = field(default=1.0)

    def is_zero(self) -> bool:
        return self.norm == 0.0


def embed(text: str, idf: IdfTable) -> EmbeddingVector:
    """TF-IDF embedding of the text; no word tokens gives the zero vector."""
    feats = text_features(text)
    if not feats:
        return EmbeddingVector({}, 0.0)
    raw = {feat: tf * idf.value(feat) for feat, tf in feats.items()}
    norm = math.sqrt(sum(w * w for w in raw.values()))
    return EmbeddingVector({f: w / norm for f, w in raw.items()}, 1.0)


class TfidfEmbedder:
    """The built-in embedding provider: pure function of (text, idf)."""

    def __init__(self, idf: IdfTable):
        self.idf = idf

    def embed(self, text: str) -> EmbeddingVector:
        return embed(text, self.idf)

    def embed_many(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self.embed(t) for t in texts]


class RemoteEmbedder:
    """HTTP embedding provider: POST /embed {"texts": [...]} -> vectors.

    Dense responses are converted to sparse vectors keyed by dimension
    index and L2-normalized, so cosine_similarity works unchanged.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def embed(self, text: str) -> EmbeddingVector:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        payload = json.dumps({"texts": list(texts)}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint + "/embed",
            data=payload,
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                body = json.load(resp)
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise EmbedProviderError(
                f"embedding endpoint {self.endpoint!r} failed: {exc}"
            ) from exc
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise EmbedProviderError(
                f"embedding endpoint {self.endpoint!r} returned a malformed response"
            )
        out = []
        for dense in vectors:
            norm = math.sqrt(sum(x * x for x in dense))
            if norm == 0.0:
                out.append(EmbeddingVector({}, 0.0))
            else:
                weights = {
                    str(i): x / norm for i, x in enumerate(dense) if x != 0.0
                }
                out.append(EmbeddingVector(weights, 1.0))
        return out


class EmbedProviderError(RuntimeError):
    """The remote embedding endpoint could not be used."""


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Dot product of normalized vectors, clamped to [0, 1]; zero -> 0.0."""
    if a.is_zero() or b.is_zero():
        return 0.0
    if len(b.weights) < len(a.weights):
        a, b = b, a
    dot = sum(w * b.weights.get(f, 0.0) for f, w in a.weights.items())
    return min(1.0, max(0.0, dot))


def e_score(text: str, c: ConstraintSet) -> float:
    """Percent of word tokens containing a forbidden letter; empty -> 0.0."""
    words = tokenize(text).words()
    if not words:
        return 0.0
    bad = sum(1 for w in words if violates(w, c))
    return bad / len(words) * 100.0


def oov_score(text: str, dictionary: set[str]) -> float:
    """Percent of word tokens absent from the dictionary; empty -> 0.0."""
    words = tokenize(text).words()
    if not words:
        return 0.0
    missing = sum(1 for w in words if canonical(w) not in dictionary)
    return missing / len(words) * 100.0


def grammar_mistakes(text: str, provider) -> dict:
    """Count provider matches; provider failures propagate as errors."""
    matches = provider.check(text)
    count = len(matches)
    words = tokenize(text).words()
    percent = count / len(words) * 100.0 if words else 0.0
    return {"count": count, "percent_of_words": percent}


_SENTENCE_SPLIT_RE = re.compile(r"[.!?]+")
_SYLLABLE_RE = re.compile(r"[aeiouy]+")


def _syllables(word: str) -> int:
    return max(1, len(_SYLLABLE_RE.findall(word.lower())))


def readability(text: str) -> float:
    """Flesch Reading Ease from word, sentence, and syllable counts.

    Sentences are [.!?]-delimited segments containing at least one word
    (minimum one). Syllables count vowel groups, minimum one per word.
    Raises ValueError on wordless text.
    """
    words = tokenize(text).words()
    if not words:
        raise ValueError("readability needs at least one word")
    sentences = sum(
        1 for seg in _SENTENCE_SPLIT_RE.split(text) if tokenize(seg).words()
    )
    sentences = max(1, sentences)
    syllables = sum(_syllables(w) for w in words)
    return (
        206.835
        - 1.015 * (len(words) / sentences)
        - 84.6 * (syllables / len(words))
    )


@dataclass
class EvaluationReport:
    """Per-paragraph metric records plus aggregate means."""

    paragraphs: list[dict]
    aggregates: dict

    def as_dict(self, config_echo: Mapping | None = None) -> dict:
        return {
            "paragraphs": self.paragraphs,
            "aggregates": self.aggregates,
            "config_echo": dict(config_echo or {}),
        }


_AGGREGATE_KEYS = (
    "similarity",
    "e_score",
    "oov",
    "grammar_count",
    "grammar_pct",
    "readability",
)


def evaluate_document(
    source_paragraphs: Sequence[str],
    translated_paragraphs: Sequence[str],
    c: ConstraintSet,
    dictionary: set[str],
    provider,
    idf: IdfTable,
    *,
    embedder=None,
) -> EvaluationReport:
    """Score each translated paragraph against its source.

    Similarity compares embeddings of source and translation; the other
    metrics are computed on the translation alone. Wordless translations
    get readability 0.0 rather than an error, since strong constraints
    legitimately produce empty output.
    """
    if len(source_paragraphs) != len(translated_paragraphs):
        raise ValueError(
            f"paragraph count mismatch: {len(source_paragraphs)} source vs "
            f"{len(translated_paragraphs)} translated"
        )
    if embedder is None:
        embedder = TfidfEmbedder(idf)
    records = []
    for i, (src, out) in enumerate(zip(source_paragraphs, translated_paragraphs)):
        src_vec, out_vec = embedder.embed_many([src, out])
        grammar = grammar_mistakes(out, provider)
        has_words = bool(tokenize(out).words())
        records.append(
            {
                "index": i,
                "similarity": cosine_similarity(src_vec, out_vec),
                "e_score": e_score(out, c),
                "oov": oov_score(out, dictionary),
                "grammar_count": grammar["count"],
                "grammar_pct": grammar["percent_of_words"],
                "readability": readability(out) if has_words else 0.0,
            }
        )
    if records:
        aggregates = {
            key: sum(r[key] for r in records) / len(records)
            for key in _AGGREGATE_KEYS
        }
    else:
        aggregates = {}
    return EvaluationReport(records, aggregates)


def report_json(report: EvaluationReport, config_echo: Mapping | None = None) -> str:
    """Stable JSON rendering of a report (sorted keys, indented)."""
    return json.dumps(report.as_dict(config_echo), sort_keys=True, indent=2)
