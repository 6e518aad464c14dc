"""Thesaurus/lemma resource and the two baseline translators.

The lexicon is a TSV file, one entry per line:

    word<TAB>lemma<TAB>syn1,syn2,...<TAB>frequency

Comment lines start with ``#``. The E-delete baseline strips forbidden
letters from every word; the synonym baseline swaps each violating word
for its best constraint-free synonym and falls back to stripping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .textcore import ConstraintSet, strip_letters, tokenize, violates


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    lemma: str
    synonyms: tuple[str, ...]
    corpus_frequency: int


@dataclass
class Lexicon:
    """Immutable after load; lookup is case-insensitive."""

    entries: dict[str, LexiconEntry] = field(default_factory=dict)
    dictionary: set[str] = field(default_factory=set)

    def lookup(self, word: str) -> LexiconEntry | None:
        return self.entries.get(word.lower())

    def frequency(self, word: str) -> int:
        entry = self.lookup(word)
        return entry.corpus_frequency if entry else 0

    def __len__(self) -> int:
        return len(self.entries)


def load_lexicon(path) -> Lexicon:
    """Parse the TSV; duplicate words keep the first occurrence.

    The lexicon's dictionary defaults to every surface word, lemma, and
    synonym in the file; OOV checks may use a separate word list instead
    (see load_dictionary).
    """
    entries: dict[str, LexiconEntry] = {}
    dictionary: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ValueError(
                    f"{path}: line {lineno}: expected 4 tab-separated fields, "
                    f"got {len(fields)}"
                )
            word, lemma, syn_field, freq_field = fields
            word = word.strip().lower()
            lemma = lemma.strip().lower()
            if not word or not lemma:
                raise ValueError(f"{path}: line {lineno}: empty word or lemma")
            synonyms = tuple(
                s.strip() for s in syn_field.split(",") if s.strip()
            )
            for s in synonyms:
                if any(ch.isspace() for ch in s):
                    raise ValueError(
                        f"{path}: line {lineno}: synonym {s!r} contains whitespace"
                    )
            try:
                freq = int(freq_field)
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: frequency {freq_field!r} is not an integer"
                ) from None
            if freq < 0:
                raise ValueError(f"{path}: line {lineno}: negative frequency")
            if word not in entries:
                entries[word] = LexiconEntry(word, lemma, synonyms, freq)
            dictionary.add(word)
            dictionary.add(lemma)
            dictionary.update(s.lower() for s in synonyms)
    return Lexicon(entries, dictionary)


def load_dictionary(path) -> set[str]:
    """One lowercase word per line; blank lines and # comments skipped."""
    words: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            w = line.strip()
            if w and not w.startswith("#"):
                words.add(w.lower())
    return words


def constraint_free_synonyms(
    word: str, c: ConstraintSet, lex: Lexicon
) -> list[str]:
    """Constraint-free synonyms of the word (and of its lemma), best first.

    Order is descending corpus frequency of the synonym itself (its own
    lexicon entry, 0 when absent), ties broken lexicographically.
    """
    entry = lex.lookup(word)
    if entry is None:
        return []
    pool = list(entry.synonyms)
    if entry.lemma != entry.word:
        lemma_entry = lex.lookup(entry.lemma)
        if lemma_entry is not None:
            pool.extend(lemma_entry.synonyms)
    seen: set[str] = set()
    result = []
    for s in pool:
        if s in seen or violates(s, c):
            continue
        seen.add(s)
        result.append(s)
    result.sort(key=lambda s: (-lex.frequency(s), s))
    return result


def _transfer_case(replacement: str, original: str) -> str:
    if original.isupper() and len(original) > 1:
        return replacement.upper()
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def translate_edelete(paragraph: str, c: ConstraintSet) -> str:
    """Remove every forbidden letter from every word; keep the rest."""
    out = []
    for tok in tokenize(paragraph):
        out.append(strip_letters(tok.text, c) if tok.kind == "word" else tok.text)
    return "".join(out)


def translate_synonym(paragraph: str, c: ConstraintSet, lex: Lexicon) -> str:
    """Swap violating words for their best constraint-free synonym.

    Constraint-free words pass through untouched; words with no usable
    synonym fall back to strip_letters on the original surface form.
    """
    out = []
    for tok in tokenize(paragraph):
        if tok.kind != "word" or not violates(tok.text, c):
            out.append(tok.text)
            continue
        synonyms = constraint_free_synonyms(tok.text, c, lex)
        if synonyms:
            out.append(_transfer_case(synonyms[0], tok.text))
        else:
            out.append(strip_letters(tok.text, c))
    return "".join(out)
