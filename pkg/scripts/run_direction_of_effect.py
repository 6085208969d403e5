"""Run the synthetic direction-of-effect experiment and print test BLEU per stage."""

import argparse

from btkit.effect import EffectConfig, direction_of_effect


def main():
    d = EffectConfig()
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bilingual", type=int, default=d.bilingual)
    ap.add_argument("--mono-per-dataset", type=int, default=d.mono_per_dataset)
    ap.add_argument("--mono-datasets", type=int, default=d.mono_datasets)
    ap.add_argument("--vocab-size", type=int, default=d.vocab_size)
    ap.add_argument("--iterations", type=int, default=d.iterations)
    ap.add_argument("--max-epochs", type=int, default=d.max_epochs)
    ap.add_argument("--seed", type=int, default=d.seed)
    ap.add_argument("--language-seed", type=int, default=d.language_seed)
    args = ap.parse_args()
    cfg = EffectConfig(
        bilingual=args.bilingual, mono_per_dataset=args.mono_per_dataset, mono_datasets=args.mono_datasets,
        vocab_size=args.vocab_size, iterations=args.iterations, max_epochs=args.max_epochs, seed=args.seed,
        language_seed=args.language_seed,
    )
    res = direction_of_effect(cfg)
    print("stage\tdirection\tBLEU\tgain")
    for stage, direction, bleu in res.rows:
        print(f"{stage}\t{direction}\t{bleu:.2f}\t{res.gain(stage, direction):+.2f}")
    print(f"# selected={res.selected} seconds={res.seconds:.1f}")


if __name__ == "__main__":
    main()
