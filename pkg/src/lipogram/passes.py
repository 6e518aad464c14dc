"""Document-level consistency and post-processing passes.

Named entities are detected heuristically (capitalization plus honorifics)
and mapped to constraint-free aliases that stay identical across the whole
document; pronouns are resolved only when a single antecedent is in range,
because a wrong name is worse than a pronoun. The remaining passes clean
punctuation, cut hallucinated suffixes, and apply grammar suggestions that
do not break the letter constraint.
"""

from __future__ import annotations

import json
import logging
import re
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .metrics import cosine_similarity
from .textcore import ConstraintSet, strip_letters, tokenize

log = logging.getLogger(__name__)

HONORIFICS = ("Mr", "Mrs", "Miss", "Dr")
PRONOUNS = frozenset(
    {"he", "she", "him", "her", "his", "hers", "they", "them", "their"}
)
DEFAULT_WINDOW = 25

# The pronoun "I" capitalizes everywhere, so it never marks an entity.
_SELF_RE = re.compile(r"I(?:['’]|$)")


@dataclass
class EntityMap:
    """Stable entity aliases for one document.

    Maps each detected entity surface form to a constraint-free alias;
    insertion order is first appearance, which fixes numeric suffixes.
    """

    aliases: dict[str, str] = field(default_factory=dict)
    window_size: int = DEFAULT_WINDOW

    def __len__(self) -> int:
        return len(self.aliases)


def _entity_spans(paragraph: str) -> list[str]:
    """Entity surface strings in one paragraph, in order of appearance.

    An entity is a maximal run of capitalized words that does not start a
    sentence, or an honorific (Mr/Mrs/Miss/Dr, optional period) followed
    by capitalized words; the run's exact source substring is returned.
    """
    tokens = tokenize(paragraph).tokens
    offsets = []
    pos = 0
    for tok in tokens:
        offsets.append(pos)
        pos += len(tok.text)

    def is_capitalized(i: int) -> bool:
        tok = tokens[i]
        return (
            tok.kind == "word"
            and tok.text[0].isupper()
            and _SELF_RE.fullmatch(tok.text[:2]) is None
        )

    spans = []
    sentence_start = True
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind != "word":
            if tok.kind == "punct" and any(ch in ".!?" for ch in tok.text):
                sentence_start = True
            i += 1
            continue

        honorific = tok.text in HONORIFICS
        if honorific or (is_capitalized(i) and not sentence_start):
            start, end, last_word = offsets[i], i, i
            j = i + 1
            if honorific and j < len(tokens) and tokens[j].text == ".":
                end = j
                j += 1
            # Absorb further capitalized words separated by single spaces.
            while (
                j + 1 < len(tokens)
                and tokens[j].kind == "space"
                and tokens[j].text == " "
                and is_capitalized(j + 1)
                and tokens[j + 1].text not in HONORIFICS
            ):
                end = last_word = j + 1
                j += 2
            qualifies = last_word > i or not honorific
            if qualifies:
                stop = offsets[end] + len(tokens[end].text)
                spans.append(paragraph[start:stop])
                sentence_start = False
                i = end + 1
                continue
        sentence_start = False
        i += 1
    return spans


def build_entity_table(paragraphs: Sequence[str], c: ConstraintSet) -> EntityMap:
    """Detect entities document-wide and assign stable aliases.

    The alias is the entity with forbidden letters stripped; colliding or
    empty aliases get a numeric suffix ("2", "3", ...) in first-seen order.
    """
    surfaces: list[str] = []
    seen: set[str] = set()
    for paragraph in paragraphs:
        for surface in _entity_spans(paragraph):
            if surface not in seen:
                seen.add(surface)
                surfaces.append(surface)

    aliases: dict[str, str] = {}
    used: set[str] = set()
    for surface in surfaces:
        base = strip_letters(surface, c).strip()
        alias = base
        suffix = 2
        while not alias or alias in used:
            alias = f"{base}{suffix}"
            suffix += 1
        used.add(alias)
        aliases[surface] = alias
    return EntityMap(aliases)


def apply_entity_map(text: str, emap: EntityMap) -> str:
    """Replace entity surface forms with their aliases, longest match first."""
    if not emap.aliases:
        return text
    ordered = sorted(emap.aliases, key=len, reverse=True)
    pattern = re.compile(
        r"(?<![A-Za-z])(?:" + "|".join(re.escape(s) for s in ordered) + r")(?![A-Za-z])"
    )
    return pattern.sub(lambda m: emap.aliases[m.group(0)], text)


def _word_forms(emap: EntityMap) -> dict[str, list[tuple[str, ...]]]:
    """Lowercased word sequences that count as a mention of each entity."""
    forms: dict[str, list[tuple[str, ...]]] = {}
    for surface, alias in emap.aliases.items():
        mentions = []
        for form in (surface, alias):
            words = tuple(w.lower() for w in tokenize(form).words())
            if words and words not in mentions:
                mentions.append(words)
        forms[surface] = mentions
    return forms


def resolve_pronouns(
    text: str, emap: EntityMap, window_size: int | None = None
) -> str:
    """Swap a pronoun for an entity alias when the antecedent is unambiguous.

    A third-person pronoun is replaced only when exactly one mapped entity
    is mentioned (by surface or alias) within the preceding window of
    words; any other situation leaves the pronoun alone.
    """
    if not emap.aliases:
        return text
    window = emap.window_size if window_size is None else window_size
    forms = _word_forms(emap)
    tokens = list(tokenize(text).tokens)
    out: list[str] = []
    words_before: list[str] = []

    for tok in tokens:
        if tok.kind != "word":
            out.append(tok.text)
            continue
        low = tok.text.lower()
        if low in PRONOUNS:
            recent = words_before[-window:]
            mentioned = [
                surface
                for surface, seqs in forms.items()
                if any(_contains_run(recent, seq) for seq in seqs)
            ]
            if len(mentioned) == 1:
                alias = emap.aliases[mentioned[0]]
                out.append(alias)
                words_before.extend(w.lower() for w in tokenize(alias).words())
                continue
        out.append(tok.text)
        words_before.append(low)
    return "".join(out)


def _contains_run(haystack: list[str], needle: tuple[str, ...]) -> bool:
    n = len(needle)
    return any(
        tuple(haystack[i:i + n]) == needle for i in range(len(haystack) - n + 1)
    )


_QUOTE_RUN_RE = re.compile(r"'{2,}")
_SPACE_BEFORE_PUNCT_RE = re.compile(r"[ \t]+([,.!?])")
_COMMA_SPACING_RE = re.compile(r",[ \t]*(?=[A-Za-z])")
_PARAGRAPH_SPLIT_RE = re.compile(r"\n[ \t]*\n")


def normalize_punctuation(text: str) -> str:
    """Canonical quotes and spacing; drops paragraphs left empty.

    Applies, in order: `` and runs of 2+ single quotes become a double
    quote; whitespace before , . ! ? is removed; a comma directly before
    a word gets exactly one following space; spaces just inside paired
    double quotes are removed.
    """
    paragraphs = []
    for paragraph in _PARAGRAPH_SPLIT_RE.split(text):
        fixed = paragraph.replace("``", '"')
        fixed = _QUOTE_RUN_RE.sub('"', fixed)
        fixed = _SPACE_BEFORE_PUNCT_RE.sub(r"\1", fixed)
        fixed = _COMMA_SPACING_RE.sub(", ", fixed)
        parts = fixed.split('"')
        for i in range(1, len(parts)):
            if i % 2 == 1:  # text after an opening quote
                parts[i] = parts[i].lstrip(" \t")
            else:  # text before this closing quote is parts[i - 1]
                parts[i - 1] = parts[i - 1].rstrip(" \t")
        fixed = '"'.join(parts)
        if fixed.strip():
            paragraphs.append(fixed)
    return "\n\n".join(paragraphs)


def drop_term_runs(text: str, min_items: int = 8) -> str:
    """Remove long comma-separated lists of single words.

    A run of min_items or more single-word items separated by commas is
    deleted outright; shorter lists stay. The threshold is a heuristic
    for what counts as a "long list".
    """
    word = r"[A-Za-z]+(?:['’][A-Za-z]+)*"
    run = re.compile(rf"{word}(?:\s*,\s*{word}){{{min_items - 1},}}")
    cleaned = run.sub("", text)
    return re.sub(r"[ \t]{2,}", " ", cleaned)


def trim_suffix(text: str, source: str, embedder) -> str:
    """Cut the text at the word boundary most similar to the source.

    Candidates are every prefix ending at a word end plus the full text;
    the highest cosine similarity wins and ties keep the longest prefix.
    """
    if not text:
        raise ValueError("cannot trim an empty text")
    ends = []
    pos = 0
    for tok in tokenize(text):
        pos += len(tok.text)
        if tok.kind == "word":
            ends.append(pos)
    candidates = [text[:end] for end in ends]
    if not candidates or candidates[-1] != text:
        candidates.append(text)
    vectors = embedder.embed_many([source] + candidates)
    sims = [cosine_similarity(vectors[0], vec) for vec in vectors[1:]]
    best = max(range(len(candidates)), key=lambda i: (sims[i], len(candidates[i])))
    return candidates[best]


class GrammarProviderError(RuntimeError):
    """The grammar service could not be reached or answered garbage."""


class GrammarMatch(NamedTuple):
    offset: int
    length: int
    replacement: str | None


class OfflineGrammar:
    """Hermetic no-op provider: no service, no matches."""

    def check(self, text: str) -> list[GrammarMatch]:
        return []


class LanguageToolClient:
    """Client for a LanguageTool-v2-compatible HTTP endpoint."""

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def check(self, text: str) -> list[GrammarMatch]:
        payload = urllib.parse.urlencode(
            {"text": text, "language": "en-US"}
        ).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint + "/v2/check", data=payload
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                body = json.loads(resp.read().decode("utf-8"))
            matches = []
            for m in body["matches"]:
                replacements = m.get("replacements") or []
                value = replacements[0].get("value") if replacements else None
                matches.append(GrammarMatch(int(m["offset"]), int(m["length"]), value))
            return matches
        except (urllib.error.URLError, OSError, ValueError, KeyError, TypeError) as exc:
            raise GrammarProviderError(
                f"grammar check via {self.endpoint} failed: {exc}"
            ) from exc


def make_grammar_provider(endpoint: str | None):
    """Empty endpoint selects the offline stub, anything else the client."""
    return LanguageToolClient(endpoint) if endpoint else OfflineGrammar()


def grammar_correct(text: str, c: ConstraintSet, provider) -> str:
    """Apply constraint-safe grammar suggestions; never fail hard.

    Suggestions that would introduce a forbidden letter are skipped, as
    are overlapping ones after an earlier suggestion was applied. An
    unreachable provider logs a warning and returns the text unchanged.
    """
    try:
        matches = provider.check(text)
    except GrammarProviderError as exc:
        log.warning("grammar correction skipped: %s", exc)
        return text
    out = []
    cursor = 0
    for m in sorted(matches, key=lambda m: (m.offset, m.length)):
        if m.replacement is None or m.offset < cursor:
            continue
        if m.offset + m.length > len(text):
            continue
        if any(ch in c for ch in m.replacement if ch.isalpha()):
            continue
        out.append(text[cursor:m.offset])
        out.append(m.replacement)
        cursor = m.offset + m.length
    out.append(text[cursor:])
    return "".join(out)
