import math

import pytest

import suggestkit as sk

QUERY = "How much should my 4 months old baby nap during the day?"


@pytest.fixture(scope="module")
def corpus():
    return sk.synth_corpus(7, 40, 8)


def test_synth_is_deterministic(corpus):
    again = sk.synth_corpus(7, 40, 8)
    assert [d.id for d in corpus.documents] == [d.id for d in again.documents]
    stats = corpus.stats()
    assert stats["documents"] == 40
    assert stats["examples"] == 8
    assert stats["suggestions"] >= 8


def test_write_and_load_roundtrip(corpus, tmp_path):
    sk.write_corpus(corpus, str(tmp_path))
    files = sorted(p.name for p in tmp_path.iterdir())
    docs = [f for f in files if "doc" in f][0]
    exs = [f for f in files if "example" in f][0]
    loaded = sk.load_corpus(str(tmp_path / docs), str(tmp_path / exs))
    assert [d.headline for d in loaded.documents] == [d.headline for d in corpus.documents]
    assert [e.query for e in loaded.examples] == [e.query for e in corpus.examples]


def test_fnv1a64_vectors():
    assert sk.fnv1a64(b"") == 0xCBF29CE484222325
    assert sk.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert sk.fnv1a64(b"foobar") == 0x85944171F73967E8


def test_tokenize_and_embed():
    assert sk.tokenize("Sleep regression at 4 months!") == ["sleep", "regression", "at", "4", "months"]
    v = sk.embed_local("nap schedule")
    assert len(v) == 256
    assert math.isclose(sum(x * x for x in v), 1.0, rel_tol=1e-12)
    assert sorted(i for i, x in enumerate(v) if x) == [108, 192]
    assert sk.cosine(v, v) == pytest.approx(1.0)


def test_empty_query_raises_with_code(corpus):
    with pytest.raises(sk.SuggestkitError) as info:
        sk.Engine(corpus).prepare("   ")
    assert info.value.code == "empty_text"
    assert info.value.stage == "embed"


def test_parse_suggestions():
    raw = "1. When should naps start?\n2) How long is a nap?\n- Is rocking ok?\nextra?"
    assert sk.parse_suggestions(raw) == [
        "When should naps start?",
        "How long is a nap?",
        "Is rocking ok?",
    ]
    with pytest.raises(sk.SuggestkitError) as info:
        sk.parse_suggestions("only one?")
    assert info.value.code == "too_few_questions"


def test_age_check():
    assert sk.check_age_consistency(QUERY, "Naps at 16 weeks?")["status"] == "consistent"
    bad = sk.check_age_consistency(QUERY, "Naps at 6 months?")
    assert bad["status"] == "mismatch"
    assert bad["details"]
    assert sk.check_age_consistency("Naps?", "Naps at 6 months?")["status"] == "no_age"


def test_percent_rounding():
    assert sk.round_half_up_percent(1, 8) == 13
    assert sk.round_half_up_percent(0, 5) == 0


def test_engine_prepare_and_suggest(corpus):
    engine = sk.Engine(corpus)
    plan = engine.prepare(QUERY)
    assert len(plan["examples"]) == 3
    assert len(plan["contexts"]) == 4
    assert QUERY in plan["prompt"]
    assert len(plan["prompt_hash"]) == 16

    with pytest.raises(sk.SuggestkitError) as info:
        engine.suggest(QUERY)
    assert info.value.code == "missing_script_key"

    scripted = sk.Engine(corpus, {QUERY: "1. A?\n2. B?\n3. C?"})
    out = scripted.suggest(QUERY)
    assert out["questions"] == ["A?", "B?", "C?"]
    assert out["prompt_hash"] == plan["prompt_hash"]

    zero = scripted.prepare(QUERY, strategy="zero")
    assert zero["examples"] == [] and zero["contexts"] == []


def test_engine_answer(corpus):
    engine = sk.Engine(corpus)
    best = engine.answer(QUERY)
    ids = {d.id for d in engine.corpus.documents}
    assert best["id"] in ids
    assert -1.0 <= best["score"] <= 1.0
