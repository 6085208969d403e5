import pytest
from hypothesis import given, strategies as st

from btkit.experiment import RunRecord, StageResult
from btkit.report import (
    COLUMNS, ReportError, TestSetMismatch, compare_runs, emit_report, parse_report, render, table_from_results,
)

LABELS = ["Bilingual", "StandardBT", "OurBT", "iteration 1", "iteration 2", "iteration 3"]
BLEU = [29.67, 32.29, 35.94, 37.96, 39.31, 40.25]


def rows(direction="en-si", bleus=BLEU, labels=LABELS):
    return [(lab, direction, b, b + 1, 50.0, 40.0) for lab, b in zip(labels, bleus)]


def test_gain_column_six_rows():
    sec = table_from_results(rows()).sections[0]
    gains = [sec.gain(r) for r in sec.ordered()]
    assert gains == [None, 2.62, 6.27, 8.29, 9.64, 10.58]


def test_single_row_has_blank_gain():
    text = render(table_from_results(rows(bleus=[12.0], labels=["Bilingual"])))
    data = text.splitlines()[2].split("\t")
    assert data[0] == "Bilingual" and data[2] == ""


def test_layout_and_formats():
    t = table_from_results(rows("si-en") + rows("en-si"))
    tsv = render(t, "tsv")
    lines = tsv.splitlines()
    assert lines[0] == "#direction=si-en" and tuple(lines[1].split("\t")) == COLUMNS
    assert "" in lines  # blank line between direction blocks
    aligned = render(t, "aligned-text")
    assert aligned.splitlines()[0] == "[si-en]" and "Bilingual" in aligned
    with pytest.raises(ValueError):
        render(t, "html")


def test_baseline_first_even_if_listed_later():
    t = table_from_results([("StandardBT", "x", 30.0, 0, 0, 0), ("Bilingual", "x", 20.0, 0, 0, 0)])
    sec = t.sections[0]
    assert [r.label for r in sec.ordered()] == ["Bilingual", "StandardBT"]
    assert sec.gain(sec.rows[0]) == 10.0


score = st.integers(0, 10000).map(lambda i: i / 100)


@given(st.lists(score, min_size=1, max_size=6))
def test_tsv_round_trip(scores):
    labels = ["Bilingual"] + [f"m{i}" for i in range(1, len(scores))]
    t = table_from_results([(lab, "a-b", s, s, s, s) for lab, s in zip(labels, scores)])
    text = render(t)
    back = parse_report(text)
    assert render(back) == text
    sec = back.sections[0]
    assert [sec.gain(r) for r in sec.ordered()] == [t.sections[0].gain(r) for r in t.sections[0].ordered()]


def test_parse_rejects_garbage():
    with pytest.raises(ReportError):
        parse_report("not\ta\treport\n")


def record(name, fp, bleu):
    res = [StageResult("Bilingual", "s-t", "b", 10.0, 10.0, 30.0, 70.0),
           StageResult("OurBT", "s-t", "o", bleu, bleu, 40.0, 60.0)]
    return RunRecord(name, None, "h", "", results=res, test_fingerprint=fp)


def test_compare_single_run():
    t = compare_runs([record("only", "abc", 20.0)])
    sec = t.sections[0]
    assert [r.label for r in sec.rows] == ["only"] and sec.gain(sec.rows[0]) is None


def test_compare_two_runs_gain():
    t = compare_runs([record("with", "abc", 20.0), record("without", "abc", 18.5)])
    sec = t.sections[0]
    assert [sec.gain(r) for r in sec.ordered()] == [None, -1.5]


def test_compare_refuses_different_test_sets():
    with pytest.raises(TestSetMismatch) as e:
        compare_runs([record("a", "fp111", 20.0), record("b", "fp222", 21.0)])
    assert "fp111" in str(e.value) and "fp222" in str(e.value)


def test_emit_report_needs_rows():
    with pytest.raises(ReportError):
        emit_report([])
    assert emit_report(record("a", "x", 12.0)).startswith("#direction=s-t")
