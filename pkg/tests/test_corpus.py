from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from btkit.corpus import (
    AlignmentError, BilingualCorpus, CleanReport, CleanRuleSet, CorpusEncodingError, CorpusError, LanguageMismatchError,
    LanguageTag, MonolingualCorpus, OverlapError, clean, concat_bilingual, expand_eval_sets, filter_by_source,
    is_code_mixed, load_bilingual, load_monolingual, make_splits, read_bilingual, read_manifest, save_bilingual,
    shuffle,
)

SRC, TGT = LanguageTag("en"), LanguageTag("lg")


def bi(pairs, id="c", tag="news", src=SRC, tgt=TGT):
    return BilingualCorpus(id, src, tgt, [(s, t, tag) for s, t in pairs])


def numbered(n, tag="news"):
    return bi([(f"s{i}", f"t{i}") for i in range(n)], tag=tag)


# ---------------------------------------------------------------- loading


def test_language_tag_nonempty():
    with pytest.raises(ValueError):
        LanguageTag("")


def test_load_monolingual_order_and_blank_skip(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("one\ntwo\nthree\n", encoding="utf-8")
    assert load_monolingual(p, "en", "m", "web").sentences == ["one", "two", "three"]
    p.write_text("one\n\nthree\n", encoding="utf-8")
    assert load_monolingual(p, "en", "m", "web").sentences == ["one", "three"]


def test_load_monolingual_bad_encoding_reports_offset(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_bytes(b"good line\nbad \xff byte\n")
    with pytest.raises(CorpusEncodingError) as e:
        load_monolingual(p, "en", "m", "web")
    assert e.value.offset == 14
    assert "14" in str(e.value)


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_monolingual(tmp_path / "nope.txt", "en", "m", "web")


def test_load_bilingual_tsv(tmp_path):
    p = tmp_path / "b.tsv"
    p.write_text("hello\tgyebale\nthanks\twebale\n", encoding="utf-8")
    c = load_bilingual(p, "en", "lg", "b", "news")
    assert c.pairs == [("hello", "gyebale", "news"), ("thanks", "webale", "news")]


def test_load_bilingual_bad_columns(tmp_path):
    p = tmp_path / "b.tsv"
    p.write_text("a\tb\tc\n", encoding="utf-8")
    with pytest.raises(AlignmentError):
        load_bilingual(p, "en", "lg", "b", "news")


def test_load_bilingual_aligned_length_mismatch(tmp_path):
    (tmp_path / "x.en").write_text("".join(f"e{i}\n" for i in range(5)), encoding="utf-8")
    (tmp_path / "x.lg").write_text("".join(f"l{i}\n" for i in range(4)), encoding="utf-8")
    with pytest.raises(AlignmentError, match="5.*4"):
        load_bilingual(tmp_path / "x.en", "en", "lg", "x", "news", target_path=tmp_path / "x.lg")


def test_save_read_roundtrip_keeps_tags(tmp_path):
    c = bi([("a", "b"), ("c", "d")], tag="bible")
    save_bilingual(c, tmp_path / "c.tsv", header={"k": "v"})
    back = read_bilingual(tmp_path / "c.tsv", SRC, TGT, "c")
    assert back.pairs == c.pairs


def test_manifest(tmp_path):
    (tmp_path / "m.tsv").write_text("# comment\nnews\ten-lg\tnews\tdata/news.tsv\nmono\ten\tweb\t/abs/m.txt\n",
                                    encoding="utf-8")
    entries = read_manifest(tmp_path / "m.tsv")
    assert [e.id for e in entries] == ["news", "mono"]
    assert entries[0].path == tmp_path / "data" / "news.tsv"
    assert str(entries[1].path) == "/abs/m.txt"


def test_manifest_duplicate_id(tmp_path):
    (tmp_path / "m.tsv").write_text("a\ten\tx\tp\na\ten\tx\tq\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="duplicate"):
        read_manifest(tmp_path / "m.tsv")


# ---------------------------------------------------------------- combining


def test_concat_order_and_identity():
    a, b = numbered(2), bi([("x", "y")] * 3, tag="web")
    c = concat_bilingual([a, b], "ab")
    assert len(c) == 5 and c.pairs[:2] == a.pairs and c.pairs[2][2] == "web"
    assert concat_bilingual([a], "a").pairs == a.pairs


def test_concat_language_mismatch():
    with pytest.raises(LanguageMismatchError):
        concat_bilingual([numbered(1), bi([("a", "b")], src=TGT, tgt=SRC)], "x")


def test_concat_table_sizes():
    sizes = [41070, 15022, 10000, 32291]
    parts = [bi([("s", "t")] * n, id=f"c{k}") for k, n in enumerate(sizes)]
    assert len(concat_bilingual(parts, "all")) == 98383


def test_filter_by_source():
    c = concat_bilingual([numbered(3, tag="bible"), numbered(2, tag="news")], "c")
    out = filter_by_source(c, {"bible"})
    assert len(out) == 2 and all(p[2] == "news" for p in out.pairs)
    assert filter_by_source(c, set()).pairs == c.pairs
    assert filter_by_source(c, {"unknown"}).pairs == c.pairs


def test_filter_everything_warns(caplog):
    out = filter_by_source(numbered(3, tag="bible"), {"bible"})
    assert len(out) == 0
    assert "removed every pair" in caplog.text


@given(st.lists(st.sampled_from(["bible", "news", "web"]), max_size=20), st.sets(st.sampled_from(["bible", "news"])))
def test_filter_never_reorders(tags, exclude):
    c = BilingualCorpus("c", SRC, TGT, [(f"s{i}", f"t{i}", t) for i, t in enumerate(tags)])
    out = filter_by_source(c, exclude)
    assert out.pairs == [p for p in c.pairs if p[2] not in exclude]


def test_shuffle_examples():
    one = numbered(1)
    assert shuffle(one, 5).pairs == one.pairs
    c = numbered(30)
    assert shuffle(c, 3).pairs == shuffle(c, 3).pairs


@given(st.lists(st.tuples(st.text(min_size=1, max_size=3), st.text(min_size=1, max_size=3)), max_size=30),
       st.integers(0, 2**32))
def test_shuffle_preserves_pairs(pairs, seed):
    c = bi(pairs)
    out = shuffle(c, seed)
    assert Counter(out.pairs) == Counter(c.pairs)


# ---------------------------------------------------------------- cleaning


def test_hyperlinks_stripped():
    m = MonolingualCorpus("m", SRC, "web", ["Visit https://example.com now", "see www.x.org"])
    out, rep = clean(m, CleanRuleSet())
    assert out.sentences == ["Visit now", "see"]
    assert rep.modified["hyperlinks"] == 2


def test_dedup_keeps_first():
    m = MonolingualCorpus("m", SRC, "web", ["abc", "abc", "def"])
    out, rep = clean(m, CleanRuleSet())
    assert out.sentences == ["abc", "def"]
    assert rep.dropped["repetitive"] == 1


def test_special_characters_and_empty():
    m = MonolingualCorpus("m", SRC, "web", ["héllo @#% world!", "@@@", "a   b"])
    out, rep = clean(m, CleanRuleSet())
    assert out.sentences == ["héllo world!", "a b"]
    assert rep.dropped["empty"] == 1


def test_bilingual_drop_removes_pair():
    c = bi([("ok", "@@"), ("fine", "good")])
    out, rep = clean(c, CleanRuleSet())
    assert out.pairs == [("fine", "good", "news")]
    assert rep.input_size == rep.output_size + rep.total_dropped


def test_no_rules_enabled_rejected():
    off = CleanRuleSet(False, False, False, False, False)
    with pytest.raises(ValueError):
        clean(MonolingualCorpus("m", SRC, "w", ["a"]), off)


def test_code_mixed_threshold_boundary(tmp_path):
    (tmp_path / "lg.txt").write_text("webale gyebale\n", encoding="utf-8")
    rules = CleanRuleSet(drop_code_mixed=True, wordlists=(("lg", str(tmp_path / "lg.txt")),))
    foreign = frozenset({"webale"})
    # enumerate every (foreign, total) composition up to 10 tokens
    for n in range(1, 11):
        for k in range(n + 1):
            s = " ".join(["webale"] * k + ["hello"] * (n - k))
            assert is_code_mixed(s, foreign, 0.3) == (Fraction(k, n) >= Fraction(3, 10)), (k, n)
    m = MonolingualCorpus("m", SRC, "web", ["hello webale my webale friend", "hello there my webale friend now"])
    out, rep = clean(m, rules)
    assert out.sentences == ["hello there my webale friend now"]
    assert rep.dropped["code_mixed"] == 1


def test_clean_report_text_roundtrip():
    m = MonolingualCorpus("m", SRC, "web", ["a", "a", "http://x", "b  c"])
    _, rep = clean(m, CleanRuleSet())
    back = CleanReport.from_text(rep.to_text())
    assert back == rep
    assert rep.input_size == rep.output_size + rep.total_dropped


messy = st.lists(
    st.lists(st.sampled_from(list("ab c.,@#:/\t") + ["http://", "www.", "é"]), max_size=12).map("".join),
    max_size=15,
)


@given(messy, st.booleans(), st.booleans(), st.booleans(), st.booleans())
def test_clean_idempotent(sentences, links, special, ws, dedup):
    rules = CleanRuleSet(links, special, ws, False, dedup)
    if not rules.enabled():
        return
    m = MonolingualCorpus("m", SRC, "web", sentences)
    once, rep = clean(m, rules)
    twice, _ = clean(once, rules)
    assert twice.sentences == once.sentences
    assert all(s.strip() for s in once.sentences)
    assert rep.input_size == rep.output_size + rep.total_dropped
    if dedup:
        assert len(set(once.sentences)) == len(once.sentences)


# ---------------------------------------------------------------- splitting


def test_split_sizes_and_determinism():
    c = numbered(10)
    s = make_splits(c, (0.8, 0.1, 0.1), 7)
    assert (len(s.train), len(s.valid), len(s.test)) == (8, 1, 1)
    again = make_splits(c, (0.8, 0.1, 0.1), 7)
    assert s.train.pairs == again.train.pairs and s.test.pairs == again.test.pairs


def test_split_seeds_differ():
    c = numbered(50)
    a, b = make_splits(c, seed=1), make_splits(c, seed=2)
    assert len(a.train) == len(b.train)
    assert a.train.pairs != b.train.pairs


def test_split_errors():
    with pytest.raises(CorpusError):
        make_splits(numbered(2))
    with pytest.raises(ValueError):
        make_splits(numbered(10), (0.5, 0.2, 0.2))


@given(st.integers(3, 60), st.integers(0, 1000))
def test_split_partition(n, seed):
    c = bi([(f"s{i % 7}", f"t{i % 5}") for i in range(n)])
    s = make_splits(c, (0.7, 0.15, 0.15), seed)
    assert Counter(s.train.pairs + s.valid.pairs + s.test.pairs) == Counter(c.pairs)
    assert len(s.valid) == int(0.15 * n + 1e-9) and len(s.test) == int(0.15 * n + 1e-9)


def test_expand_eval_sets():
    s = make_splits(numbered(20), seed=0)
    extra = bi([(f"x{i}", f"y{i}") for i in range(100)], tag="newtest")
    e = expand_eval_sets(s, extra)
    assert e.variant == "newtest"
    assert len(e.valid) == len(s.valid) + 50 and len(e.test) == len(s.test) + 50
    assert e.train.pairs == s.train.pairs
    one = expand_eval_sets(s, bi([("x", "y")]))
    assert len(one.test) == len(s.test) + 1 and len(one.valid) == len(s.valid)


def test_expand_eval_sets_overlap():
    s = make_splits(numbered(20), seed=0)
    s0, t0, _ = s.train.pairs[0]
    with pytest.raises(OverlapError) as e:
        expand_eval_sets(s, bi([(s0, t0), ("new", "pair")]))
    assert (s0, t0) in e.value.pairs
