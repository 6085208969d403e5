import pytest

from btkit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_evaluate(tmp_path, capsys):
    (tmp_path / "h").write_text("the cat sat on the mat\n")
    (tmp_path / "r").write_text("the cat sat on the mat\n")
    code, out, _ = run(capsys, "evaluate", str(tmp_path / "h"), str(tmp_path / "r"), "--format", "tsv",
                       "--baseline-bleu", "40")
    assert code == 0
    row = out.splitlines()[2].split("\t")
    assert row[1] == "100.00" and row[5] == "0.00"
    assert "# gain=60.00" in out and "plain+ngram:4" in out


def test_pipeline_subcommands(tmp_path, capsys, fixtures_dir):
    data = fixtures_dir / "data"
    assert run(capsys, "clean", str(data / "news.tsv"), str(tmp_path / "news.tsv"), "--pair", "src-tgt")[0] == 0
    code, out, _ = run(capsys, "--seed", "3", "split", str(tmp_path / "news.tsv"), str(tmp_path / "splits"))
    assert code == 0 and out.startswith("train=")
    code, out, _ = run(capsys, "learn-bpe", str(tmp_path / "splits" / "train.tsv"), "--vocab-size", "300",
                       "--output", str(tmp_path / "bpe.codes"))
    assert code == 0 and "fingerprint=" in out
    code, _, _ = run(capsys, "train", str(tmp_path / "splits" / "train.tsv"), "--valid",
                     str(tmp_path / "splits" / "valid.tsv"), "--bpe", str(tmp_path / "bpe.codes"),
                     "--max-epochs", "3", "--output", str(tmp_path / "m.model"))
    assert code == 0
    code, out, _ = run(capsys, "translate", "--model", str(tmp_path / "m.model"), "--bpe",
                       str(tmp_path / "bpe.codes"), "--input", str(fixtures_dir / "model" / "probe.src"))
    assert code == 0
    assert len(out.splitlines()) == len((fixtures_dir / "model" / "probe.src").read_text().splitlines())


def test_translate_fingerprint_mismatch(tmp_path, capsys, fixtures_dir):
    (tmp_path / "c.txt").write_text("zz yy xx\n")
    run(capsys, "learn-bpe", str(tmp_path / "c.txt"), "--vocab-size", "12", "--output", str(tmp_path / "b"))
    code, _, err = run(capsys, "translate", "--model", str(fixtures_dir / "model" / "src-tgt.model"),
                       "--bpe", str(tmp_path / "b"), "--input", str(tmp_path / "c.txt"))
    assert code == 1
    assert err.splitlines()[-1].startswith("error\t")


def test_missing_file_reports_error(capsys):
    code, _, err = run(capsys, "report", "--run-dir", "/nonexistent/run")
    assert code == 1 and err.splitlines()[-1].startswith("error\tFileNotFoundError\t")


def test_bt_needs_config(capsys):
    code, _, err = run(capsys, "bt")
    assert code == 1 and "needs --config" in err


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == 2


def test_report_and_compare(ourbt_run, capsys):
    d = str(ourbt_run.run_dir)
    code, out, _ = run(capsys, "report", "--run-dir", d, "--format", "tsv")
    assert code == 0 and out == (ourbt_run.run_dir / "report.tsv").read_text()
    code, out, _ = run(capsys, "compare", d, d)
    assert code == 0 and out.startswith("[src-tgt]")
