"""Word-level backoff n-gram language model with a text serialization.

The model scores tokens with stupid backoff: use the relative frequency of
the longest attested n-gram, otherwise pay a fixed log(alpha) penalty and
retry with a shorter context, bottoming out in a unigram floor with add-one
for unseen tokens. Scores are log-ratios, not normalized log-probabilities,
which is all the beam search needs for ranking.

Training counts lowercased word tokens per paragraph, padding each paragraph
with order-1 leading ``<s>`` markers and one trailing ``</s>``.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

from .textcore import canonical, split_paragraphs, tokenize

BOS = "<s>"
EOS = "</s>"

DEFAULT_ORDER = 3
DEFAULT_ALPHA = 0.4

_HEADER_RE = re.compile(r"NGRAM-LM v1 order=(\d+) alpha=([0-9.eE+-]+)\Z")


@dataclass
class NGramModel:
    """Immutable-by-convention n-gram counts plus backoff weight.

    ``tables[k-1]`` maps k-token tuples to counts. The unigram table always
    exists; higher tables are present up to ``order``.
    """

    order: int
    alpha: float
    tables: tuple[dict[tuple[str, ...], int], ...]
    vocabulary: frozenset[str] = field(repr=False)

    @cached_property
    def total(self) -> int:
        """Summed unigram count (the denominator of the unigram floor)."""
        return sum(self.tables[0].values())

    @cached_property
    def _continuations(self) -> dict[tuple[str, ...], dict[str, int]]:
        index: dict[tuple[str, ...], dict[str, int]] = {}
        for table in self.tables[1:]:
            for gram, count in table.items():
                index.setdefault(gram[:-1], {})[gram[-1]] = count
        return index

    def count(self, gram: Sequence[str]) -> int:
        key = tuple(gram)
        if not 1 <= len(key) <= self.order:
            return 0
        return self.tables[len(key) - 1].get(key, 0)

    def continuations(self, context: Sequence[str]) -> Mapping[str, int]:
        """All attested next tokens after ``context`` with their full-gram
        counts. Empty mapping when the context itself is unattested."""
        return self._continuations.get(tuple(context), {})

    def token_logscore(self, context: Sequence[str], token: str) -> float:
        """Stupid-backoff log score of ``token`` after ``context``.

        Only the last order-1 context tokens matter. Always <= 0.
        """
        if self.order > 1:
            ctx = tuple(context[-(self.order - 1):])
        else:
            ctx = ()
        return self._score(ctx, token)

    def _score(self, ctx: tuple[str, ...], token: str) -> float:
        if ctx:
            full = ctx + (token,)
            c_full = self.tables[len(full) - 1].get(full, 0)
            if c_full:
                c_ctx = self.tables[len(ctx) - 1].get(ctx, 0)
                if c_ctx:
                    return math.log(c_full / c_ctx)
            return math.log(self.alpha) + self._score(ctx[1:], token)
        c_uni = self.tables[0].get((token,), 0)
        if c_uni:
            return math.log(c_uni / self.total)
        return math.log(1.0 / (self.total + len(self.vocabulary)))

    def sequence_logscore(self, tokens: Sequence[str]) -> float:
        """Sum of per-token scores with left-padded boundary context."""
        history: list[str] = [BOS] * (self.order - 1)
        total = 0.0
        for token in tokens:
            total += self.token_logscore(history, token)
            history.append(token)
        return total

    def save(self, path: str | Path) -> None:
        """Write the model as text, one section per order, deterministic."""
        lines = [f"NGRAM-LM v1 order={self.order} alpha={self.alpha!r}"]
        for k in range(1, self.order + 1):
            table = self.tables[k - 1]
            for gram in sorted(table):
                lines.append(f"{table[gram]}\t{' '.join(gram)}")
            if k < self.order:
                lines.append("")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def train(corpus: str, order: int = DEFAULT_ORDER, alpha: float = DEFAULT_ALPHA) -> NGramModel:
    """Count n-grams of every order up to ``order`` over the corpus.

    Each paragraph is one unit: its lowercased words are padded with order-1
    leading BOS markers and a trailing EOS, and every sliding window of every
    order is counted, so each attested n-gram's prefix is attested too.
    """
    if not 1 <= order <= 5:
        raise ValueError(f"order must be in [1, 5], got {order}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if not corpus.strip():
        raise ValueError("corpus is empty")

    counters = [Counter() for _ in range(order)]
    saw_words = False
    for paragraph in split_paragraphs(corpus):
        words = [canonical(w) for w in tokenize(paragraph).words()]
        if not words:
            continue
        saw_words = True
        padded = [BOS] * (order - 1) + words + [EOS]
        for k in range(1, order + 1):
            table = counters[k - 1]
            for i in range(len(padded) - k + 1):
                table[tuple(padded[i:i + k])] += 1
    if not saw_words:
        raise ValueError("corpus contains no word tokens")

    vocabulary = {gram[0] for gram in counters[0]} | {BOS, EOS}
    return NGramModel(
        order=order,
        alpha=alpha,
        tables=tuple(dict(c) for c in counters),
        vocabulary=frozenset(vocabulary),
    )


def load(path: str | Path) -> NGramModel:
    """Parse a saved model; malformed or truncated files raise ValueError."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text:
        raise ValueError(f"{path}: empty model file")
    header, sep, body = text.partition("\n")
    if not sep:
        raise ValueError(f"{path}: missing model body")
    m = _HEADER_RE.match(header)
    if m is None:
        raise ValueError(f"{path}: bad header {header!r} (expected NGRAM-LM v1)")
    order = int(m.group(1))
    if order < 1:
        raise ValueError(f"{path}: order must be >= 1, got {order}")
    try:
        alpha = float(m.group(2))
    except ValueError:
        raise ValueError(f"{path}: bad alpha {m.group(2)!r}") from None
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"{path}: alpha must be in (0, 1], got {alpha}")

    sections = body.rstrip("\n").split("\n\n")
    if len(sections) != order:
        raise ValueError(
            f"{path}: expected {order} sections, found {len(sections)} "
            "(truncated file?)"
        )
    tables: list[dict[tuple[str, ...], int]] = []
    for k, section in enumerate(sections, start=1):
        table: dict[tuple[str, ...], int] = {}
        for line in section.splitlines():
            count_str, tab, gram_str = line.partition("\t")
            if not tab:
                raise ValueError(f"{path}: malformed line {line!r}")
            try:
                count = int(count_str)
            except ValueError:
                raise ValueError(f"{path}: bad count in line {line!r}") from None
            if count < 1:
                raise ValueError(f"{path}: nonpositive count in line {line!r}")
            gram = tuple(gram_str.split(" "))
            if len(gram) != k or not all(gram):
                raise ValueError(
                    f"{path}: expected a {k}-gram, got {gram_str!r}"
                )
            if gram in table:
                raise ValueError(f"{path}: duplicate {k}-gram {gram_str!r}")
            table[gram] = count
        if not table:
            raise ValueError(f"{path}: empty section for order {k}")
        tables.append(table)

    _check_integrity(path, order, tables)
    vocabulary = {gram[0] for gram in tables[0]} | {BOS, EOS}
    return NGramModel(
        order=order,
        alpha=alpha,
        tables=tuple(tables),
        vocabulary=frozenset(vocabulary),
    )


def _check_integrity(
    path: Path, order: int, tables: list[dict[tuple[str, ...], int]]
) -> None:
    """Reject files whose tables cannot have come from ``train``.

    Training counts every sliding window over each padded paragraph, so the
    summed counts of consecutive orders differ by exactly the number of
    paragraphs, which is also the unigram count of the EOS marker. A file
    truncated at a line boundary parses but fails this balance. Every
    higher-order gram must also have an attested prefix.
    """
    if order < 2:
        return
    paragraphs = tables[0].get((EOS,), 0)
    if paragraphs < 1:
        raise ValueError(f"{path}: missing {EOS} unigram")
    sums = [sum(t.values()) for t in tables]
    for k in range(2, order + 1):
        if sums[k - 2] - sums[k - 1] != paragraphs:
            raise ValueError(
                f"{path}: inconsistent counts between orders {k - 1} and {k} "
                "(truncated file?)"
            )
        for gram in tables[k - 1]:
            if gram[:-1] not in tables[k - 2]:
                raise ValueError(
                    f"{path}: {k}-gram {' '.join(gram)!r} lacks an attested prefix"
                )
