"""Metric oracles: hand-computed TF-IDF fixture, score formulas, report shape."""

import http.server
import json
import math
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipogram.metrics import (
    EmbeddingVector,
    EmbedProviderError,
    RemoteEmbedder,
    TfidfEmbedder,
    build_idf,
    cosine_similarity,
    e_score,
    embed,
    evaluate_document,
    grammar_mistakes,
    oov_score,
    readability,
    report_json,
    text_features,
)
from lipogram.textcore import ConstraintSet, strip_letters, tokenize

E = ConstraintSet.from_string("e")
NONE = ConstraintSet()

# Three-document fixture corpus for all IDF hand computations.
DOCS = ["the cat sat", "the dog sat", "a bird"]
IDF = build_idf(DOCS)

IDF_DF2 = math.log(4 / 3) + 1.0  # df=2 ("the", "sat")
IDF_DF1 = math.log(4 / 2) + 1.0  # df=1 (everything else attested)
IDF_DF0 = math.log(4 / 1) + 1.0  # unseen


class StubGrammar:
    def __init__(self, matches):
        self.matches = matches

    def check(self, text):
        return list(self.matches)


class FailingGrammar:
    def check(self, text):
        raise RuntimeError("provider unreachable")


class TestFeatures:
    def test_unigrams_and_bigrams(self):
        feats = text_features("The cat sat")
        assert feats == {"the": 1, "cat": 1, "sat": 1, "the cat": 1, "cat sat": 1}

    def test_canonicalized(self):
        assert text_features("I’ve") == {"i've": 1}

    def test_empty(self):
        assert text_features("...") == {}


class TestIdf:
    def test_hand_values(self):
        assert IDF.n_documents == 3
        assert IDF.value("the") == IDF_DF2
        assert IDF.value("sat") == IDF_DF2
        assert IDF.value("cat") == IDF_DF1
        assert IDF.value("cat sat") == IDF_DF1
        assert IDF.value("never seen") == IDF_DF0

    def test_df_counts_documents_not_occurrences(self):
        idf = build_idf(["word word word", "other"])
        assert idf.value("word") == math.log(3 / 2) + 1.0


class TestEmbed:
    def test_hand_weights(self):
        v = embed("cat sat", IDF)
        raw = {"cat": IDF_DF1, "sat": IDF_DF2, "cat sat": IDF_DF1}
        norm = math.sqrt(sum(w * w for w in raw.values()))
        assert set(v.weights) == set(raw)
        for feat, w in raw.items():
            assert v.weights[feat] == w / norm
        assert v.norm == 1.0

    def test_bigram_feature_present(self):
        v = embed("cat sat", IDF)
        assert v.weights["cat sat"] > 0

    def test_stored_norm_matches_computed(self):
        v = embed("the cat sat on the mat", IDF)
        computed = math.sqrt(sum(w * w for w in v.weights.values()))
        assert abs(computed - v.norm) < 1e-9

    def test_wordless_text_is_zero_vector(self):
        v = embed("", IDF)
        assert v.is_zero() and v.weights == {}
        assert embed("12 ... !", IDF).is_zero()

    def test_identical_texts_identical_vectors(self):
        a = embed("the cat sat", IDF)
        b = embed("the cat sat", IDF)
        assert a.weights == b.weights and a.norm == b.norm

    def test_term_frequency_scales(self):
        v = embed("cat cat", IDF)
        # tf=2 unigram and tf=1 bigram "cat cat", both idf df1/df0.
        raw = {"cat": 2 * IDF_DF1, "cat cat": IDF_DF0}
        norm = math.sqrt(sum(w * w for w in raw.values()))
        assert v.weights["cat"] == raw["cat"] / norm


class TestCosine:
    def test_self_similarity_one(self):
        v = embed("the cat sat", IDF)
        assert cosine_similarity(v, v) >= 1.0 - 1e-9
        assert cosine_similarity(v, v) <= 1.0

    def test_disjoint_zero(self):
        a = embed("cat", IDF)
        b = embed("dog", IDF)
        assert cosine_similarity(a, b) == 0.0

    def test_hand_two_feature_case(self):
        a = EmbeddingVector({"x": 1.0}, 1.0)
        r = math.sqrt(0.5)
        b = EmbeddingVector({"x": r, "y": r}, 1.0)
        assert cosine_similarity(a, b) == r
        assert abs(cosine_similarity(a, b) - 0.7071) < 5e-5

    def test_zero_vector_convention(self):
        z = EmbeddingVector({}, 0.0)
        v = embed("cat", IDF)
        assert cosine_similarity(z, v) == 0.0
        assert cosine_similarity(v, z) == 0.0
        assert cosine_similarity(z, z) == 0.0

    @given(
        st.lists(st.sampled_from(["cat", "dog", "sat", "bird", "the"]), max_size=6),
        st.lists(st.sampled_from(["cat", "dog", "sat", "bird", "a"]), max_size=6),
    )
    @settings(max_examples=60)
    def test_symmetric_and_bounded(self, ws1, ws2):
        a = embed(" ".join(ws1), IDF)
        b = embed(" ".join(ws2), IDF)
        s1, s2 = cosine_similarity(a, b), cosine_similarity(b, a)
        assert abs(s1 - s2) < 1e-12
        assert 0.0 <= s1 <= 1.0


class TestEScore:
    def test_hand_count(self):
        assert e_score("the cat sat", E) == (1 / 3) * 100.0

    def test_empty_text(self):
        assert e_score("", E) == 0.0
        assert e_score("1234 !?", E) == 0.0

    def test_free_text(self):
        assert e_score("a big cat sat", E) == 0.0

    def test_case_insensitive(self):
        assert e_score("Ever", E) == 100.0

    @given(st.lists(st.sampled_from(["the", "cat", "seven", "dog", "tree"]), max_size=8))
    def test_stripped_text_scores_zero(self, words):
        text = " ".join(strip_letters(w, E) for w in words)
        assert e_score(text, E) == 0.0

    @given(st.lists(st.sampled_from(["the", "cat", "ever", "dog"]), min_size=1, max_size=8))
    def test_punctuation_invariance(self, words):
        plain = " ".join(words)
        noisy = ", ".join(words) + "!?..."
        assert e_score(noisy, E) == e_score(plain, E)


class TestOov:
    DICT = {"the", "wall", "cat", "i've"}

    def test_all_known(self):
        assert oov_score("the cat", self.DICT) == 0.0

    def test_hand_count(self):
        assert oov_score("bhind the wall", self.DICT) == (1 / 3) * 100.0

    def test_empty(self):
        assert oov_score("", self.DICT) == 0.0

    def test_lookup_is_canonical(self):
        assert oov_score("The CAT", self.DICT) == 0.0
        assert oov_score("I’ve", self.DICT) == 0.0

    @given(st.lists(st.sampled_from(["the", "cat", "zzq", "wall"]), min_size=1, max_size=8))
    def test_punctuation_invariance(self, words):
        plain = " ".join(words)
        noisy = "; ".join(words) + " ..."
        assert oov_score(noisy, self.DICT) == oov_score(plain, self.DICT)


class TestGrammarMistakes:
    def test_stub_counts(self):
        text = " ".join(["word"] * 50)
        out = grammar_mistakes(text, StubGrammar([object(), object()]))
        assert out == {"count": 2, "percent_of_words": 4.0}

    def test_pass_through_stub(self):
        assert grammar_mistakes("any text at all", StubGrammar([]))["count"] == 0

    def test_empty_text(self):
        out = grammar_mistakes("", StubGrammar([]))
        assert out == {"count": 0, "percent_of_words": 0.0}

    def test_provider_failure_propagates(self):
        with pytest.raises(RuntimeError, match="unreachable"):
            grammar_mistakes("text", FailingGrammar())


class TestReadability:
    def test_hand_formula(self):
        got = readability("The cat sat.")
        assert got == 206.835 - 1.015 * (3 / 1) - 84.6 * (3 / 3)
        assert abs(got - 119.19) < 1e-9

    def test_syllable_groups(self):
        # "reading" -> ea, i = 2 groups; "dry" -> y = 1.
        got = readability("Reading dry.")
        assert got == 206.835 - 1.015 * (2 / 1) - 84.6 * (3 / 2)

    def test_minimum_one_syllable(self):
        # "nth" has no vowel group but still counts one syllable.
        got = readability("Nth.")
        assert got == 206.835 - 1.015 * (1 / 1) - 84.6 * (1 / 1)

    def test_sentences_need_words(self):
        # Trailing "..." opens a wordless segment that must not count.
        one = readability("The cat sat.")
        assert readability("The cat sat...") == one

    def test_no_terminator_is_one_sentence(self):
        assert readability("the cat sat") == readability("the cat sat.")

    def test_longer_sentences_score_lower(self):
        short = readability("One two. Three four.")
        long = readability("One two three four.")
        assert long < short

    def test_wordless_errors(self):
        with pytest.raises(ValueError):
            readability("")
        with pytest.raises(ValueError):
            readability("12 34 !")

    def test_deterministic(self):
        t = "Some longer sentence, with clauses, for the counter."
        assert readability(t) == readability(t)


class TestEvaluateDocument:
    def test_self_evaluation_similarity_one(self):
        paras = DOCS
        report = evaluate_document(
            paras, paras, NONE, {"any"}, StubGrammar([]), IDF
        )
        for rec in report.paragraphs:
            assert rec["similarity"] >= 1.0 - 1e-9
            assert rec["e_score"] == 0.0

    def test_empty_document(self):
        report = evaluate_document([], [], E, set(), StubGrammar([]), IDF)
        assert report.paragraphs == [] and report.aggregates == {}

    def test_count_mismatch_errors(self):
        with pytest.raises(ValueError, match="mismatch"):
            evaluate_document(["a"], [], E, set(), StubGrammar([]), IDF)

    def test_two_paragraph_fixture(self):
        source = ["the cat sat", "the dog sat"]
        translated = ["that cat sat", ""]
        dictionary = {"that", "sat", "dog"}
        report = evaluate_document(
            source, translated, E, dictionary, StubGrammar([object()]), IDF
        )
        first, second = report.paragraphs
        assert first["index"] == 0 and second["index"] == 1

        vs = embed("the cat sat", IDF)
        vt = embed("that cat sat", IDF)
        assert first["similarity"] == cosine_similarity(vs, vt)
        assert first["e_score"] == 0.0
        assert first["oov"] == (1 / 3) * 100.0  # "cat" absent
        assert first["grammar_count"] == 1
        assert first["grammar_pct"] == (1 / 3) * 100.0
        assert first["readability"] == readability("that cat sat")

        assert second["similarity"] == 0.0
        assert second["e_score"] == 0.0
        assert second["oov"] == 0.0
        assert second["readability"] == 0.0  # wordless translation

        for key in ("similarity", "e_score", "oov", "grammar_count",
                    "grammar_pct", "readability"):
            mean = (first[key] + second[key]) / 2
            assert abs(report.aggregates[key] - mean) < 1e-9

    def test_report_json_schema(self):
        report = evaluate_document(
            ["the cat sat"], ["the cat sat"], NONE, {"the", "cat", "sat"},
            StubGrammar([]), IDF,
        )
        data = json.loads(report_json(report, {"letters": ""}))
        assert set(data) == {"paragraphs", "aggregates", "config_echo"}
        assert data["config_echo"] == {"letters": ""}
        rec = data["paragraphs"][0]
        assert set(rec) == {
            "index", "similarity", "e_score", "oov",
            "grammar_count", "grammar_pct", "readability",
        }


class _EmbedHandler(http.server.BaseHTTPRequestHandler):
    vectors = [[3.0, 4.0], [0.0, 0.0]]
    fail = False

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        if self.path != "/embed" or self.fail:
            self.send_response(500)
            self.end_headers()
            return
        reply = json.dumps(
            {"vectors": self.vectors[: len(body["texts"])]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(reply)))
        self.end_headers()
        self.wfile.write(reply)

    def log_message(self, *args):
        pass


@pytest.fixture
def embed_server():
    server = http.server.HTTPServer(("127.0.0.1", 0), _EmbedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
    thread.join()


class TestRemoteEmbedder:
    def test_normalizes_dense_vectors(self, embed_server):
        _EmbedHandler.fail = False
        client = RemoteEmbedder(embed_server)
        v = client.embed("anything")
        assert v.weights == {"0": 0.6, "1": 0.8}
        assert v.norm == 1.0

    def test_zero_vector_from_remote(self, embed_server):
        _EmbedHandler.fail = False
        vs = RemoteEmbedder(embed_server).embed_many(["a", "b"])
        assert vs[1].is_zero()
        assert cosine_similarity(vs[0], vs[1]) == 0.0

    def test_unreachable_raises(self):
        client = RemoteEmbedder("http://127.0.0.1:1", timeout=0.5)
        with pytest.raises(EmbedProviderError):
            client.embed("text")

    def test_server_error_raises(self, embed_server):
        _EmbedHandler.fail = True
        try:
            with pytest.raises(EmbedProviderError):
                RemoteEmbedder(embed_server).embed("text")
        finally:
            _EmbedHandler.fail = False


class TestEmbedderInterfaces:
    def test_tfidf_embed_many_matches_embed(self):
        embedder = TfidfEmbedder(IDF)
        singles = [embedder.embed(d) for d in DOCS]
        batch = embedder.embed_many(DOCS)
        assert [v.weights for v in batch] == [v.weights for v in singles]
