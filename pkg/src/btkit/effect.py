"""Desk-scale direction-of-effect experiment on a synthetic language pair.

Trains bilingual baselines on a small parallel set, runs OurBT over pools of
monolingual text, then two more BT iterations on the selected data, and
reports test BLEU per stage and direction.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .bt import BtConfig, MonoPool, iterative_bt, our_bt
from .subword import learn_bpe
from .synthetic import CipherLanguagePair
from .translator import TrainConfig


@dataclass
class EffectConfig:
    language_seed: int = 3
    vocab_size: int = 50
    bilingual: int = 300
    valid: int = 100
    test: int = 200
    mono_datasets: int = 3
    mono_per_dataset: int = 1000  # per side, so 3,000 sentences per language by default
    bpe_vocab_size: int = 2000
    max_epochs: int = 15
    iterations: int = 2
    seed: int = 0


@dataclass
class EffectResult:
    rows: list[tuple[str, str, float]]  # (stage, direction, test BLEU)
    selected: dict[str, list[str]]
    seconds: float

    def bleu(self, stage: str, direction: str) -> float:
        return next(b for s, d, b in self.rows if s == stage and d == direction)

    def gain(self, stage: str, direction: str) -> float:
        return self.bleu(stage, direction) - self.bleu("Bilingual", direction)

    @property
    def final_stage(self) -> str:
        return self.rows[-1][0]


def direction_of_effect(cfg: EffectConfig = EffectConfig()) -> EffectResult:
    t0 = time.perf_counter()
    lang = CipherLanguagePair(vocab_size=cfg.vocab_size, seed=cfg.language_seed)
    D = lang.bilingual(cfg.bilingual, seed=1)
    V = lang.bilingual(cfg.valid, seed=2)
    T = lang.bilingual(cfg.test, seed=3)
    n = cfg.mono_datasets
    pool_s = MonoPool([lang.monolingual(cfg.mono_per_dataset, 10 + i, "source", f"src{i}") for i in range(n)])
    pool_t = MonoPool([lang.monolingual(cfg.mono_per_dataset, 20 + i, "target", f"tgt{i}") for i in range(n)])
    bpe = learn_bpe([D] + pool_s.datasets + pool_t.datasets, cfg.bpe_vocab_size)
    tc = TrainConfig(max_epochs=cfg.max_epochs, seed=cfg.seed)
    bc = BtConfig(seed=cfg.seed)
    f, b, st = our_bt(D, pool_s, pool_t, bpe, tc, bc, valid=V, test=T)
    fwd, bwd = st.directions
    baselines = (st.models[st.baseline[fwd]], st.models[st.baseline[bwd]])
    it = iterative_bt(
        D, pool_s.concat(st.selected.get(bwd) or pool_s.ids), pool_t.concat(st.selected.get(fwd) or pool_t.ids),
        bpe, tc, bc, max_iterations=cfg.iterations, convergence_epsilon=-math.inf,
        valid=V, test=T, baselines=baselines, init=(f, b),
    )
    later = [r for r in it.rows if r.stage != "Bilingual"]
    rows = [(r.stage, r.direction, r.result.bleu.score) for r in st.rows + later]
    return EffectResult(rows, dict(st.selected), time.perf_counter() - t0)
