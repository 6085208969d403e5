"""Command line entry point: ``btkit <subcommand> ...``.

On failure the last line on stderr is ``error<TAB><ExceptionType><TAB><message>``
and the exit code is nonzero (2 for usage errors, 1 otherwise).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .corpus import (
    BilingualCorpus, CleanRuleSet, clean, load_bilingual, load_monolingual, make_splits, read_bilingual,
    save_bilingual, save_monolingual,
)
from .experiment import load_config, load_record, run_experiment, STAGES
from .metrics import evaluate_all, get_profile
from .report import compare_runs, emit_report, render, table_from_results
from .subword import learn_bpe, load_bpe, save_bpe
from .translator import BeamConfig, LexicalBackend, TrainConfig, load_model, save_model, translate


def _lines(path) -> list[str]:
    if path in (None, "-"):
        return [ln.rstrip("\n") for ln in sys.stdin]
    return Path(path).read_text(encoding="utf-8").splitlines()


def _langs(pair: str) -> tuple[str, str]:
    src, sep, tgt = pair.partition("-")
    if not sep or not src or not tgt:
        raise ValueError(f"language pair must look like src-tgt, got {pair!r}")
    return src, tgt


def _pairs(path, src, tgt, id, tag) -> BilingualCorpus:
    """Plain ``src<TAB>tgt`` files, or the tagged three-column TSV written by ``split``."""
    first = next((ln for ln in _lines(path) if ln and not ln.startswith("#")), "")
    if first.count("\t") == 2:
        return read_bilingual(path, src, tgt, id)
    return load_bilingual(path, src, tgt, id, tag)


def _rules(args) -> CleanRuleSet:
    if args.config:
        return load_config(args.config, seed=args.seed, run_dir=args.run_dir or ".").clean_rules
    return CleanRuleSet()


def cmd_clean(args):
    rules = _rules(args)
    if args.pair:
        src, tgt = _langs(args.pair)
        corpus = load_bilingual(args.input, src, tgt, Path(args.input).stem, args.tag)
    else:
        corpus = load_monolingual(args.input, args.language, Path(args.input).stem, args.tag)
    cleaned, report = clean(corpus, rules)
    if isinstance(cleaned, BilingualCorpus):
        Path(args.output).write_text("".join(f"{s}\t{t}\n" for s, t, _ in cleaned.pairs), encoding="utf-8")
    else:
        save_monolingual(cleaned, args.output)
    if args.report:
        Path(args.report).write_text(report.to_text(), encoding="utf-8")
    print(f"kept {report.output_size} of {report.input_size}")


def cmd_split(args):
    src, tgt = _langs(args.pair)
    corpus = _pairs(args.input, src, tgt, Path(args.input).stem, args.tag)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    split = make_splits(corpus, ratios, args.seed if args.seed is not None else 0)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "valid", "test"):
        save_bilingual(getattr(split, name), out / f"{name}.tsv")
    print(f"train={len(split.train)} valid={len(split.valid)} test={len(split.test)}")


def cmd_learn_bpe(args):
    corpora = [_lines(p) for p in args.input]
    # TSV inputs contribute both columns
    texts = [[col for ln in c for col in ln.split("\t")[:2]] for c in corpora]
    model = learn_bpe(texts, args.vocab_size)
    save_bpe(model, args.output)
    print(f"merges={len(model.merges)} vocab={len(model.vocab)} fingerprint={model.fingerprint}")


def cmd_train(args):
    src, tgt = _langs(args.pair)
    train = _pairs(args.train, src, tgt, "train", "train")
    valid = _pairs(args.valid, src, tgt, "valid", "valid") if args.valid else None
    bpe = load_bpe(args.bpe)
    cfg = TrainConfig(max_epochs=args.max_epochs, seed=args.seed if args.seed is not None else 0)
    model = LexicalBackend().train(train, valid, bpe, cfg)
    save_model(model, args.output)
    print(f"epochs={model.training_meta.get('epochs')} best_epoch={model.training_meta.get('best_epoch')}")


def cmd_translate(args):
    model = load_model(args.model)
    bpe = load_bpe(args.bpe)
    beam = BeamConfig(beam_width=args.beam_width)
    for line in translate(model, _lines(args.input), beam, bpe):
        print(line)


def cmd_bt(args):
    if not args.config:
        raise ValueError("bt needs --config")
    cfg = load_config(args.config, seed=args.seed, run_dir=args.run_dir)
    rec = run_experiment(cfg, stop_after=args.stop_after)
    ran = ",".join(rec.executed) or "none"
    print(f"run_dir={rec.run_dir} stages_run={ran} test_fingerprint={rec.test_fingerprint}")
    if rec.results:
        print(emit_report(rec, "aligned-text"), end="")


def cmd_evaluate(args):
    hyps, refs = _lines(args.hyp), _lines(args.ref)
    res = evaluate_all(hyps, refs, baseline=args.baseline_bleu, profile=get_profile(args.profile))
    row = (args.label, "eval", res.bleu.score, res.sacrebleu.score, res.chrf2.score, res.ter.score)
    print(render(table_from_results([row]), args.format), end="")
    if res.gain is not None:
        print(f"# gain={res.gain:.2f}")
    print(f"# {res.bleu.signature}")


def cmd_report(args):
    if not args.run_dir:
        raise ValueError("report needs --run-dir")
    print(emit_report(load_record(args.run_dir), args.format), end="")


def cmd_compare(args):
    records = [load_record(d) for d in args.runs]
    print(render(compare_runs(records), args.format), end="")


def _global_options(ap, default):
    ap.add_argument("--config", default=default, help="experiment config (INI)")
    ap.add_argument("--run-dir", default=default, help="run directory (overrides the config's output)")
    ap.add_argument("--seed", type=int, default=default, help="override every seed")
    ap.add_argument("-v", "--verbose", action="store_true", default=default or False)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="btkit", description="Back-translation experiments for low-resource pairs.")
    _global_options(ap, None)
    # the same options are accepted after the subcommand; SUPPRESS keeps the
    # subparser from overwriting values given before it
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help):
        return sub.add_parser(name, parents=[common], help=help)

    p = add("clean", help="clean a mono- or bilingual corpus")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--language", default="src", help="language code of a monolingual input")
    p.add_argument("--pair", help="src-tgt: treat input as a two-column TSV")
    p.add_argument("--tag", default="corpus", help="source tag")
    p.add_argument("--report", help="write the clean report here")
    p.set_defaults(func=cmd_clean)

    p = add("split", help="seeded train/valid/test split of a TSV")
    p.add_argument("input")
    p.add_argument("output_dir")
    p.add_argument("--pair", default="src-tgt")
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--tag", default="corpus")
    p.set_defaults(func=cmd_split)

    p = add("learn-bpe", help="learn one joint BPE model")
    p.add_argument("input", nargs="+", help="text or TSV files")
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_learn_bpe)

    p = add("train", help="train one translation direction")
    p.add_argument("train")
    p.add_argument("--valid")
    p.add_argument("--bpe", required=True)
    p.add_argument("--pair", default="src-tgt")
    p.add_argument("--max-epochs", type=int, default=TrainConfig.max_epochs)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_train)

    p = add("translate", help="translate lines from a file or stdin")
    p.add_argument("--model", required=True)
    p.add_argument("--bpe", required=True)
    p.add_argument("--input", default="-")
    p.add_argument("--beam-width", type=int, default=BeamConfig.beam_width)
    p.set_defaults(func=cmd_translate)

    p = add("bt", help="run or resume a full experiment from --config")
    p.add_argument("--stop-after", choices=STAGES)
    p.set_defaults(func=cmd_bt)

    p = add("evaluate", help="score hypotheses against references")
    p.add_argument("hyp")
    p.add_argument("ref")
    p.add_argument("--profile", default="plain")
    p.add_argument("--label", default="system")
    p.add_argument("--baseline-bleu", type=float)
    p.add_argument("--format", choices=("tsv", "aligned-text"), default="aligned-text")
    p.set_defaults(func=cmd_evaluate)

    p = add("report", help="print a finished run's table")
    p.add_argument("--format", choices=("tsv", "aligned-text"), default="aligned-text")
    p.set_defaults(func=cmd_report)

    p = add("compare", help="one row per run, same test set required")
    p.add_argument("runs", nargs="+")
    p.add_argument("--format", choices=("tsv", "aligned-text"), default="aligned-text")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except Exception as e:
        if args.verbose:
            logging.exception("command failed")
        msg = str(e).replace("\n", " ").replace("\t", " ")
        print(f"error\t{type(e).__name__}\t{msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
