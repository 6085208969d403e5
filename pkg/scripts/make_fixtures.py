"""Regenerate the small corpora, configs and model file under tests/fixtures.

Everything is derived from fixed seeds, so rerunning this script reproduces
the committed files byte for byte.
"""

import argparse
from pathlib import Path

from btkit.corpus import save_monolingual
from btkit.subword import learn_bpe, save_bpe
from btkit.synthetic import CipherLanguagePair
from btkit.translator import LexicalBackend, TrainConfig, save_model, translate

CONFIG = """\
[run]
name = {name}
output = runs/{name}
metric_profile = plain

[data]
manifest = data/manifest.tsv
source_language = src
target_language = tgt
exclude_tags = {exclude}

[clean]
strip_hyperlinks = true
strip_special_characters = true
drop_repetitive = true

[split]
ratios = 0.8, 0.1, 0.1
seed = 7

[bpe]
vocab_size = 600

[train]
seed = 0
max_epochs = 8

[bt]
strategy = {strategy}
top_k = 2
max_iterations = 2
convergence_epsilon = 0.5
beam_width = 3
seed = 0
"""


def _plain(corpus):
    return "".join(f"{s}\t{t}\n" for s, t, _ in corpus.pairs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    args = ap.parse_args(argv)
    out = Path(args.out)
    data = out / "data"
    data.mkdir(parents=True, exist_ok=True)

    lang = CipherLanguagePair(seed=3)
    (data / "news.tsv").write_text(_plain(lang.bilingual(220, seed=1, tag="news")), encoding="utf-8")
    (data / "bible.tsv").write_text(_plain(lang.bilingual(60, seed=2, tag="bible")), encoding="utf-8")
    manifest = ["news\tsrc-tgt\tnews\tnews.tsv", "bible\tsrc-tgt\tbible\tbible.tsv"]
    for side, short in (("source", "src"), ("target", "tgt")):
        for k in range(2):
            m = lang.monolingual(200, seed=10 + k + (0 if short == "src" else 50), side=side, id=f"{short}{k}")
            save_monolingual(m, data / f"{short}{k}.txt")
            manifest.append(f"{short}{k}\t{short}\tweb\t{short}{k}.txt")
        n = lang.noise(200, seed=90 if short == "src" else 91, side=side, id=f"{short}noise")
        save_monolingual(n, data / f"{short}noise.txt")
        manifest.append(f"{short}noise\t{short}\tforum\t{short}noise.txt")
    (data / "manifest.tsv").write_text("\n".join(manifest) + "\n", encoding="utf-8")

    for name, strategy, exclude in (("ourbt", "ourbt", ""), ("ourbt-nobible", "ourbt", "bible"),
                                    ("standard", "standard", "")):
        (out / f"{name}.ini").write_text(CONFIG.format(name=name, strategy=strategy, exclude=exclude),
                                         encoding="utf-8")

    # a committed model file pins the on-disk format
    mdir = out / "model"
    mdir.mkdir(exist_ok=True)
    D = lang.bilingual(80, seed=4, tag="news")
    bpe = learn_bpe([D], 200)
    save_bpe(bpe, mdir / "bpe.codes")
    model = LexicalBackend().train(D, None, bpe, TrainConfig(max_epochs=5, seed=0))
    save_model(model, mdir / "src-tgt.model")
    # stamp an older tool version: same format must still load
    mfile = mdir / "src-tgt.model"
    text = mfile.read_text(encoding="utf-8")
    first, rest = text.split("\n", 1)
    mfile.write_text(first.rsplit("tool=", 1)[0] + "tool=0.0.1\n" + rest, encoding="utf-8")
    probe = lang.bilingual(10, seed=5, tag="probe")
    (mdir / "probe.src").write_text("".join(s + "\n" for s in probe.sources), encoding="utf-8")
    (mdir / "probe.expected").write_text("\n".join(translate(model, probe.sources, bpe=bpe)) + "\n",
                                         encoding="utf-8")
    print(f"fixtures written to {out}")


if __name__ == "__main__":
    main()
