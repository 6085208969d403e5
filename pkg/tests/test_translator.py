import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from btkit.corpus import BilingualCorpus, LanguageTag
from btkit.subword import apply_bpe, learn_bpe
from btkit.synthetic import CipherLanguagePair
from btkit.translator import (
    BOS, EOS, BeamConfig, CorruptModelError, ExternalModelSpec, FingerprintMismatch, LexicalBackend, TrainConfig,
    TranslatorModel, _bigram_lm, beam_search, load_model, save_model, train, translate,
)

A, B = LanguageTag("a"), LanguageTag("b")


def identity_corpus(n=200, vocab=20, seed=0):
    rng = random.Random(seed)
    words = [f"w{chr(97 + i)}" for i in range(vocab)]
    pairs = []
    for _ in range(n):
        s = " ".join(rng.choice(words) for _ in range(rng.randint(2, 6)))
        pairs.append((s, s, "id"))
    return BilingualCorpus("identity", A, A, pairs)


@pytest.fixture(scope="module")
def identity_model():
    D = identity_corpus()
    bpe = learn_bpe([D], 60)
    return train(D, None, bpe, TrainConfig(max_epochs=30)), bpe, D


@pytest.fixture(scope="module")
def cipher():
    lang = CipherLanguagePair(seed=3)
    D = lang.bilingual(150, seed=1)
    V = lang.bilingual(40, seed=2)
    bpe = learn_bpe([D, V], 400)
    return D, V, bpe


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(patience=0)
    with pytest.raises(ValueError):
        BeamConfig(beam_width=0)
    spec = ExternalModelSpec()
    assert (spec.layers, spec.d_model, spec.d_ff, spec.heads, spec.dropout) == (6, 512, 2048, 8, 0.1)


def test_identity_table_is_diagonal(identity_model):
    model, _, _ = identity_model
    for src, row in model.lexical_table.items():
        assert max(row, key=row.get) == src


def test_identity_translation(identity_model):
    model, bpe, D = identity_model
    for s in D.sources[:20]:
        assert translate(model, [s], bpe=bpe) == [s]
    assert translate(model, [], bpe=bpe) == []


def test_single_pair():
    D = BilingualCorpus("one", A, B, [("a", "b", "x")])
    bpe = learn_bpe([D], 3)
    m = train(D, None, bpe, TrainConfig(max_epochs=3))
    assert m.lexical_table == {"a</w>": {"b</w>": 1.0}}


def test_empty_corpus_rejected():
    bpe = learn_bpe([["a b"]], 5)
    with pytest.raises(ValueError):
        train(BilingualCorpus("e", A, B, []), None, bpe)


def test_determinism(cipher):
    D, V, bpe = cipher
    m1 = train(D, V, bpe, TrainConfig(max_epochs=6, batch_size=40, seed=3))
    m2 = train(D, V, bpe, TrainConfig(max_epochs=6, batch_size=40, seed=3))
    assert m1.digest() == m2.digest()
    assert translate(m1, V.sources, bpe=bpe) == translate(m2, V.sources, bpe=bpe)


def test_em_monotone_and_row_stochastic(cipher):
    D, V, bpe = cipher
    m = train(D, V, bpe, TrainConfig(max_epochs=12, batch_size=32, em_tolerance=0.0, patience=50))
    lls = [h["train_ll"] for h in m.training_meta["history"]]
    assert len(lls) >= 2
    assert all(b >= a - 1e-9 for a, b in zip(lls, lls[1:]))
    for row in m.lexical_table.values():
        assert sum(row.values()) == pytest.approx(1.0, abs=1e-6)
        assert all(0.0 <= p <= 1.0 for p in row.values())


def test_early_stopping_keeps_best(cipher):
    D, V, bpe = cipher
    m = train(D, V, bpe, TrainConfig(max_epochs=15, patience=2, em_tolerance=0.0))
    hist = m.training_meta["history"]
    best = m.training_meta["valid_score"]
    later = [h["valid"] for h in hist if h["epoch"] > m.training_meta["best_epoch"]]
    assert all(best >= v for v in later)
    assert len(hist) <= 15


# ---------------------------------------------------------------- decoding


def random_model(rng, n_src=4, n_tgt=5):
    S = [f"s{i}" for i in range(n_src)]
    T = [f"t{i}" for i in range(n_tgt)]
    lex = {}
    for s in S:
        w = [rng.random() ** 3 + 1e-6 for _ in T]
        z = sum(w)
        lex[s] = {t: x / z for t, x in zip(T, w)}
    targets = [[rng.choice(T) for _ in range(rng.randint(1, 5))] for _ in range(rng.randint(1, 6))]
    big, unseen, v = _bigram_lm(targets, 0.1)
    return TranslatorModel(A, B, lex, big, unseen, v, "fp"), S


def path_score(model, src, out):
    s, prev = 0.0, BOS
    for x, y in zip(src, out):
        s += math.log(model.lexical_table[x][y]) + model.lm_logprob(prev, y)
        prev = y
    return s + model.lm_logprob(prev, EOS)


def greedy(model, src, k):
    out, prev = [], BOS
    for x in src:
        row = sorted(model.lexical_table[x].items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        best = min(row, key=lambda kv: (-(math.log(kv[1]) + model.lm_logprob(prev, kv[0])), kv[0]))
        out.append(best[0])
        prev = best[0]
    return out


@given(st.integers(0, 10**6))
def test_beam_width_one_is_greedy(seed):
    rng = random.Random(seed)
    model, S = random_model(rng)
    src = [rng.choice(S) for _ in range(rng.randint(1, 7))]
    out, score = beam_search(model, src, BeamConfig(beam_width=1, candidates_per_token=5))
    assert out == greedy(model, src, 5)
    assert score == pytest.approx(path_score(model, src, out))


@given(st.integers(0, 10**6))
def test_beam_monotone_in_width(seed):
    rng = random.Random(seed)
    model, S = random_model(rng)
    src = [rng.choice(S) for _ in range(rng.randint(1, 7))]
    scores = [beam_search(model, src, BeamConfig(beam_width=w, candidates_per_token=5))[1] for w in range(1, 7)]
    assert all(b >= a - 1e-12 for a, b in zip(scores, scores[1:]))


def test_wide_beam_is_exact():
    rng = random.Random(4)
    for _ in range(30):
        model, S = random_model(rng, n_tgt=3)
        src = [rng.choice(S) for _ in range(rng.randint(1, 4))]
        best = max(
            (path_score(model, src, list(o)), o)
            for o in itertools.product(*[list(model.lexical_table[x]) for x in src])
        )
        _, score = beam_search(model, src, BeamConfig(beam_width=3, candidates_per_token=3))
        assert score == pytest.approx(best[0])


def test_unknown_token_copied(identity_model):
    model, bpe, _ = identity_model
    out, _ = beam_search(model, ["zz</w>"], BeamConfig())
    assert out == ["zz</w>"]


def test_fingerprint_mismatch(identity_model, cipher):
    model, _, _ = identity_model
    _, _, other = cipher
    with pytest.raises(FingerprintMismatch):
        translate(model, ["wa"], bpe=other)


# ---------------------------------------------------------------- persistence


def test_save_load_roundtrip(tmp_path, cipher):
    D, V, bpe = cipher
    m = train(D, V, bpe, TrainConfig(max_epochs=4))
    save_model(m, tmp_path / "m.model")
    back = load_model(tmp_path / "m.model")
    assert back.digest() == m.digest()
    assert translate(back, V.sources, bpe=bpe) == translate(m, V.sources, bpe=bpe)
    backend = LexicalBackend()
    assert backend.fingerprint(back) == bpe.fingerprint


def test_truncated_and_tampered(tmp_path, identity_model):
    model, _, _ = identity_model
    p = tmp_path / "m.model"
    save_model(model, p)
    text = p.read_text(encoding="utf-8")
    p.write_text(text[: len(text) // 2], encoding="utf-8")
    with pytest.raises(CorruptModelError, match="truncated"):
        load_model(p)
    p.write_text(text.replace("\t0.", "\t1.", 1), encoding="utf-8")
    with pytest.raises(CorruptModelError, match="checksum"):
        load_model(p)
    p.write_text(text.replace("format=1", "format=2"), encoding="utf-8")
    with pytest.raises(CorruptModelError, match="format"):
        load_model(p)


def test_committed_fixture_loads(fixtures_dir):
    from btkit.subword import load_bpe

    mdir = fixtures_dir / "model"
    model = load_model(mdir / "src-tgt.model")
    assert (mdir / "src-tgt.model").read_text(encoding="utf-8").startswith("#btkit-model\tformat=1\ttool=0.0.1")
    bpe = load_bpe(mdir / "bpe.codes")
    probe = (mdir / "probe.src").read_text(encoding="utf-8").splitlines()
    expected = (mdir / "probe.expected").read_text(encoding="utf-8").splitlines()
    assert translate(model, probe, bpe=bpe) == expected


def test_translate_uses_bpe_segments(identity_model):
    model, bpe, D = identity_model
    toks = apply_bpe(bpe, D.sources[0]).tokens
    out, _ = beam_search(model, toks, BeamConfig())
    assert len(out) == len(toks)
