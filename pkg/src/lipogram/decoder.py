"""Constrained beam-search paraphraser over an n-gram model.

The constraint is enforced by construction: the search expands only over a
pre-filtered allow-list of legal words, so no output can ever violate it.
Each expansion is scored by a weighted mix of the backoff LM score and the
TF-IDF cosine similarity of the partial hypothesis to the source paragraph;
the similarity term is maintained incrementally so every candidate token of
every beam is scored per step without re-embedding.

Hypotheses may terminate cost-free once the minimum length is reached and
are force-terminated at the maximum length; the returned candidates are the
top completions of a single run (deterministic mode) or the winners of K
independently seeded Gumbel-noise runs (sampled mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .lexicon import Lexicon, constraint_free_synonyms
from .metrics import IdfTable, TfidfEmbedder, cosine_similarity, embed
from .ngram import BOS, EOS, NGramModel
from .textcore import ConstraintSet, canonical, tokenize, violates


class EmptyVocabulary(RuntimeError):
    """No legal candidate word survives the constraint."""


class DecodeFailure(RuntimeError):
    """The search ended with no complete hypothesis."""


MODES = ("deterministic", "sampled")

# Config-file keys that belong to the surrounding tooling, not the decoder.
RESERVED_CONFIG_KEYS = frozenset(
    {"grammar.endpoint", "embed.endpoint", "sweep.extras"}
)


@dataclass(frozen=True)
class DecoderConfig:
    beam_width: int = 20
    candidates_k: int = 10
    no_repeat_ngram: int = 3
    min_ratio: float = 0.5
    max_ratio: float = 1.5
    temperature: float = 0.90
    lambda_lm: float = 1.0
    lambda_sim: float = 5.0
    candidate_vocab_size: int = 500
    mode: str = "deterministic"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.candidates_k < 1:
            raise ValueError("candidates_k must be >= 1")
        if self.beam_width < self.candidates_k:
            raise ValueError("beam_width must be >= candidates_k")
        if not 0 < self.min_ratio <= self.max_ratio:
            raise ValueError("need 0 < min_ratio <= max_ratio")
        if self.no_repeat_ngram < 2:
            raise ValueError("no_repeat_ngram must be >= 2")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.lambda_lm < 0 or self.lambda_sim < 0:
            raise ValueError("lambda weights must be >= 0")
        if self.candidate_vocab_size < 0:
            raise ValueError("candidate_vocab_size must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @classmethod
    def from_mapping(cls, pairs: Mapping[str, str]) -> "DecoderConfig":
        """Build a config from string key=value pairs; unknown keys error."""
        coercers = {"int": int, "float": float, "str": str}
        known = {f.name: coercers[f.type] for f in fields(cls)}
        kwargs = {}
        for key, value in pairs.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            try:
                kwargs[key] = known[key](value)
            except ValueError:
                raise ValueError(
                    f"config key {key!r} has invalid value {value!r}"
                ) from None
        return cls(**kwargs)


def parse_config_file(path: str | Path) -> tuple[DecoderConfig, dict[str, str]]:
    """Read a key=value config file.

    Returns the decoder config plus the reserved tool-level keys
    (grammar.endpoint, embed.endpoint, sweep.extras) found in the file.
    Blank lines and #-comments are skipped; any other unknown key errors.
    """
    pairs: dict[str, str] = {}
    extras: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, value = stripped.partition("=")
            if not sep:
                raise ValueError(
                    f"{path}: line {lineno}: expected key=value, got {stripped!r}"
                )
            key, value = key.strip(), value.strip()
            if key in RESERVED_CONFIG_KEYS:
                extras[key] = value
            else:
                pairs[key] = value
    try:
        config = DecoderConfig.from_mapping(pairs)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return config, extras


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[str, ...]
    lm_score: float
    sim_score: float
    combined: float

    def text(self) -> str:
        return " ".join(self.tokens)


def build_candidate_vocab(
    source_paragraph: str,
    c: ConstraintSet,
    lex: Lexicon,
    m: NGramModel,
    M: int,
) -> list[str]:
    """Legal words for the search, in deterministic priority order.

    Source words that pass the constraint come first (source order), then
    constraint-free synonyms of every source word, then the M most frequent
    legal model-vocabulary words (count desc, then alphabetical).
    """
    ordered: list[str] = []
    seen: set[str] = set()

    def add(word: str) -> None:
        if word not in seen:
            seen.add(word)
            ordered.append(word)

    source_words = list(
        dict.fromkeys(canonical(w) for w in tokenize(source_paragraph).words())
    )
    for word in source_words:
        if not violates(word, c):
            add(word)
    for word in source_words:
        for synonym in constraint_free_synonyms(word, c, lex):
            add(canonical(synonym))
    legal_model_words = sorted(
        (
            (-count, word)
            for (word,), count in m.tables[0].items()
            if word not in (BOS, EOS) and not violates(word, c)
        )
    )
    for _, word in legal_model_words[:M]:
        add(word)

    if not ordered:
        raise EmptyVocabulary(
            f"no legal candidate words under letters {c.as_string()!r}"
        )
    return ordered


class _BeamEngine:
    """Vectorized synchronized-length beam search over a fixed vocabulary.

    All beams share a length at every step; ending is cost-free, so every
    surviving beam of legal length is recorded as a completed hypothesis
    and the search simply continues to the maximum length.
    """

    def __init__(
        self,
        source_paragraph: str,
        vocab: Sequence[str],
        cfg: DecoderConfig,
        model: NGramModel,
        idf: IdfTable,
    ):
        self.cfg = cfg
        self.model = model
        self.idf = idf
        self.vocab = list(vocab)
        self.index = {w: i for i, w in enumerate(self.vocab)}
        n_vocab = len(self.vocab)

        source_words = [canonical(w) for w in tokenize(source_paragraph).words()]
        self.source_len = len(source_words)
        self.min_len = math.ceil(cfg.min_ratio * self.source_len)
        self.max_len = math.floor(cfg.max_ratio * self.source_len)

        # Unigram LM score vector, built with math.log so stacked backoff
        # sums stay bit-identical to NGramModel.token_logscore.
        total, v_model = model.total, len(model.vocabulary)
        uni = model.tables[0]
        base = np.empty(n_vocab)
        for i, word in enumerate(self.vocab):
            count = uni.get((word,), 0)
            if count:
                base[i] = math.log(count / total)
            else:
                base[i] = math.log(1.0 / (total + v_model))
        self._uni_vec = base
        self._log_alpha = math.log(model.alpha)
        self._lm_cache: dict[tuple[str, ...], np.ndarray] = {(): base}

        # Similarity machinery: the source's normalized TF-IDF weights and
        # per-token idf arrays for incremental dot/sum-of-squares updates.
        self.source_vec = embed(source_paragraph, idf)
        src = self.source_vec.weights
        self._idf_uni = np.array([idf.value(w) for w in self.vocab])
        self._idf_uni_sq = self._idf_uni**2
        self._default_sq = idf.default**2
        self._src_uni = np.array(
            [src.get(w, 0.0) * idf.value(w) for w in self.vocab]
        )
        bigram_by_first: dict[str, list[tuple[int, float]]] = {}
        for feat, value in idf.values.items():
            first, sep, second = feat.partition(" ")
            if sep:
                j = self.index.get(second)
                if j is not None:
                    bigram_by_first.setdefault(first, []).append((j, value))
        self._bigram_by_first = bigram_by_first
        src_bi_by_first: dict[str, list[tuple[int, float]]] = {}
        for feat, weight in src.items():
            first, sep, second = feat.partition(" ")
            if sep:
                j = self.index.get(second)
                if j is not None:
                    src_bi_by_first.setdefault(first, []).append(
                        (j, weight * idf.value(feat))
                    )
        self._src_bi_by_first = src_bi_by_first
        self._bigram_sq_cache: dict[str, np.ndarray] = {}
        self._src_bi_cache: dict[str, np.ndarray] = {}

    def _lm_vec(self, ctx: tuple[str, ...]) -> np.ndarray:
        vec = self._lm_cache.get(ctx)
        if vec is not None:
            return vec
        vec = self._log_alpha + self._lm_vec(ctx[1:])
        c_ctx = self.model.count(ctx)
        if c_ctx:
            for token, c_full in self.model.continuations(ctx).items():
                j = self.index.get(token)
                if j is not None:
                    vec[j] = math.log(c_full / c_ctx)
        self._lm_cache[ctx] = vec
        return vec

    def _context(self, tokens: tuple[str, ...]) -> tuple[str, ...]:
        span = self.model.order - 1
        if span <= 0:
            return ()
        padded = (BOS,) * span + tokens
        return padded[-span:]

    def _bigram_sq(self, first: str) -> np.ndarray:
        arr = self._bigram_sq_cache.get(first)
        if arr is None:
            arr = np.full(len(self.vocab), self._default_sq)
            for j, value in self._bigram_by_first.get(first, ()):
                arr[j] = value * value
            self._bigram_sq_cache[first] = arr
        return arr

    def _src_bi(self, first: str) -> np.ndarray:
        arr = self._src_bi_cache.get(first)
        if arr is None:
            arr = np.zeros(len(self.vocab))
            for j, contrib in self._src_bi_by_first.get(first, ()):
                arr[j] = contrib
            self._src_bi_cache[first] = arr
        return arr

    def _banned(self, tokens: tuple[str, ...]) -> list[int]:
        n = self.cfg.no_repeat_ngram
        if len(tokens) < n - 1:
            return []
        prefix = tokens[-(n - 1):]
        banned = []
        for i in range(len(tokens) - n + 1):
            if tokens[i:i + n - 1] == prefix:
                banned.append(self.index[tokens[i + n - 1]])
        return banned

    def run(self, rng: np.random.Generator | None = None) -> list[Hypothesis]:
        cfg = self.cfg
        n_vocab = len(self.vocab)
        if self.max_len < self.min_len:
            raise DecodeFailure(
                f"no legal output length: min {self.min_len} > max {self.max_len}"
            )

        beam_tokens: list[tuple[str, ...]] = [()]
        beam_lm = [0.0]
        beam_dot = [0.0]
        beam_ssq = [0.0]
        beam_uni_tf: list[dict[str, int]] = [{}]
        beam_bi_tf: list[dict[tuple[str, str], int]] = [{}]
        pool: list[Hypothesis] = []

        for step in range(1, self.max_len + 1):
            n_beams = len(beam_tokens)
            lm_mat = np.empty((n_beams, n_vocab))
            dot_mat = np.empty((n_beams, n_vocab))
            ssq_mat = np.empty((n_beams, n_vocab))
            for b, tokens in enumerate(beam_tokens):
                lm_mat[b] = beam_lm[b] + self._lm_vec(self._context(tokens))
                if tokens:
                    last = tokens[-1]
                    dot_mat[b] = beam_dot[b] + self._src_uni + self._src_bi(last)
                    ssq_row = beam_ssq[b] + self._idf_uni_sq + self._bigram_sq(last)
                else:
                    last = None
                    dot_mat[b] = beam_dot[b] + self._src_uni
                    ssq_row = beam_ssq[b] + self._idf_uni_sq
                # Repeated-feature corrections: tf goes k -> k+1, adding
                # idf^2 * 2k on top of the fresh-feature idf^2 baseline.
                for word, count in beam_uni_tf[b].items():
                    j = self.index[word]
                    ssq_row[j] += self._idf_uni_sq[j] * (2 * count)
                if last is not None:
                    bigram_sq = self._bigram_sq(last)
                    for (first, second), count in beam_bi_tf[b].items():
                        if first == last:
                            j = self.index[second]
                            ssq_row[j] += bigram_sq[j] * (2 * count)
                ssq_mat[b] = ssq_row

            sim_mat = np.clip(dot_mat / np.sqrt(ssq_mat), 0.0, 1.0)
            comb_mat = cfg.lambda_lm * lm_mat + cfg.lambda_sim * sim_mat
            for b, tokens in enumerate(beam_tokens):
                banned = self._banned(tokens)
                if banned:
                    comb_mat[b, banned] = -np.inf

            if rng is None:
                rank = comb_mat.ravel()
            else:
                rank = (comb_mat / cfg.temperature).ravel()
                rank = rank + rng.gumbel(size=rank.shape)
            flat_comb = comb_mat.ravel()
            order = np.argsort(-rank, kind="stable")

            picks = []
            for flat_idx in order:
                if len(picks) == cfg.beam_width:
                    break
                if not np.isfinite(flat_comb[flat_idx]):
                    break
                picks.append(int(flat_idx))
            if not picks:
                break

            next_tokens = []
            next_lm, next_dot, next_ssq = [], [], []
            next_uni, next_bi = [], []
            record = step >= self.min_len
            for flat_idx in picks:
                b, t = divmod(flat_idx, n_vocab)
                word = self.vocab[t]
                tokens = beam_tokens[b] + (word,)
                lm = float(lm_mat[b, t])
                sim = float(sim_mat[b, t])
                comb = float(comb_mat[b, t])
                next_tokens.append(tokens)
                next_lm.append(lm)
                next_dot.append(float(dot_mat[b, t]))
                next_ssq.append(float(ssq_mat[b, t]))
                uni_tf = dict(beam_uni_tf[b])
                uni_tf[word] = uni_tf.get(word, 0) + 1
                next_uni.append(uni_tf)
                bi_tf = dict(beam_bi_tf[b])
                if beam_tokens[b]:
                    key = (beam_tokens[b][-1], word)
                    bi_tf[key] = bi_tf.get(key, 0) + 1
                next_bi.append(bi_tf)
                if record:
                    pool.append(Hypothesis(tokens, lm, sim, comb))

            beam_tokens = next_tokens
            beam_lm, beam_dot, beam_ssq = next_lm, next_dot, next_ssq
            beam_uni_tf, beam_bi_tf = next_uni, next_bi

        if not pool:
            raise DecodeFailure(
                f"no hypothesis completed (lengths {self.min_len}..{self.max_len})"
            )
        pool.sort(key=lambda h: (-h.combined, h.tokens))
        return pool


def beam_search(
    source_paragraph: str,
    c: ConstraintSet,
    cfg: DecoderConfig,
    m: NGramModel,
    lex: Lexicon,
    embedder: TfidfEmbedder,
) -> list[Hypothesis]:
    """Decode one paragraph; top candidates sorted by combined score.

    The in-search similarity term always uses the built-in TF-IDF embedder
    (it needs feature-level access for incremental updates); a remote
    embedder belongs in multiselect and evaluation instead.
    """
    if not isinstance(embedder, TfidfEmbedder):
        raise TypeError(
            "beam_search requires the built-in TF-IDF embedder; "
            "remote embedders apply only to selection and evaluation"
        )
    if not tokenize(source_paragraph).words():
        raise ValueError("source paragraph has no words")
    vocab = build_candidate_vocab(
        source_paragraph, c, lex, m, cfg.candidate_vocab_size
    )
    engine = _BeamEngine(source_paragraph, vocab, cfg, m, embedder.idf)

    if cfg.mode == "deterministic":
        pool = engine.run()
        return pool[: cfg.candidates_k]

    winners = []
    failures = 0
    for i in range(cfg.candidates_k):
        rng = np.random.default_rng([cfg.seed, i])
        try:
            winners.append(engine.run(rng)[0])
        except DecodeFailure:
            failures += 1
    if not winners:
        raise DecodeFailure(
            f"all {cfg.candidates_k} sampled runs failed to complete"
        )
    winners.sort(key=lambda h: (-h.combined, h.tokens))
    return winners


def multiselect(candidates: Sequence[Hypothesis], source: str, embedder) -> Hypothesis:
    """The candidate most similar to the source; ties keep the earliest."""
    if not candidates:
        raise ValueError("multiselect needs at least one candidate")
    vectors = embedder.embed_many([source] + [h.text() for h in candidates])
    source_vec = vectors[0]
    best = None
    best_sim = -1.0
    for candidate, vec in zip(candidates, vectors[1:]):
        sim = cosine_similarity(source_vec, vec)
        if sim > best_sim:
            best_sim = sim
            best = candidate
    return best
