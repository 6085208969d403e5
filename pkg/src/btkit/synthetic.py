"""Toy language pairs for desk-scale experiments.

Sentences are walks of a sparse bigram Markov chain over a small set of
concepts. Each language spells every concept with its own cipher word, but
some concepts have a second spelling, used when the preceding concept falls
in a language-specific class. Translating into a language therefore needs
target-side context to pick the spelling, which is what extra monolingual
text (via back translation) supplies.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field

from .corpus import BilingualCorpus, LanguageTag, MonolingualCorpus


def _make_words(rng: random.Random, n: int, alphabet: str, taken: set) -> list[str]:
    words = []
    while len(words) < n:
        w = "".join(rng.choice(alphabet) for _ in range(rng.randint(3, 6)))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


@dataclass
class CipherLanguagePair:
    vocab_size: int = 50
    ambiguous: int = 25
    successors: int = 20
    min_len: int = 4
    max_len: int = 9
    seed: int = 0
    source: LanguageTag = field(default_factory=lambda: LanguageTag("src"))
    target: LanguageTag = field(default_factory=lambda: LanguageTag("tgt"))

    def __post_init__(self):
        rng = random.Random(self.seed)
        taken: set = set()
        self.concepts = list(range(self.vocab_size))
        self.spell = {}
        for side, alphabet in (("source", string.ascii_lowercase[:13]), ("target", string.ascii_lowercase[13:])):
            main = _make_words(rng, self.vocab_size, alphabet, taken)
            alt_words = _make_words(rng, self.ambiguous, alphabet, taken)
            alt = dict(zip(rng.sample(self.concepts, self.ambiguous), alt_words))
            klass = {c: rng.randint(0, 1) for c in self.concepts}
            self.spell[side] = (main, alt, klass)
        # Zipf-like start and transition weights over a few successors per concept
        self.start_weights = [1.0 / (r + 1) for r in range(self.vocab_size)]
        self.next_concepts = {}
        for c in self.concepts:
            succ = rng.sample(self.concepts, self.successors)
            self.next_concepts[c] = (succ, [1.0 / (r + 1) for r in range(len(succ))])

    def words(self, side: str) -> list[str]:
        main, alt, _ = self.spell[side]
        return main + [alt[c] for c in sorted(alt)]

    def _walk(self, rng: random.Random) -> list[int]:
        n = rng.randint(self.min_len, self.max_len)
        out = [rng.choices(self.concepts, self.start_weights)[0]]
        while len(out) < n:
            succ, wts = self.next_concepts[out[-1]]
            out.append(rng.choices(succ, wts)[0])
        return out

    def render(self, walk: list[int], side: str) -> str:
        main, alt, klass = self.spell[side]
        out = []
        prev = None
        for c in walk:
            if c in alt and prev is not None and klass[prev] == 1:
                out.append(alt[c])
            else:
                out.append(main[c])
            prev = c
        return " ".join(out)

    def bilingual(self, n: int, seed: int, id: str = "bitext", tag: str = "synthetic") -> BilingualCorpus:
        rng = random.Random(seed)
        pairs = []
        for _ in range(n):
            w = self._walk(rng)
            pairs.append((self.render(w, "source"), self.render(w, "target"), tag))
        return BilingualCorpus(id, self.source, self.target, pairs)

    def monolingual(self, n: int, seed: int, side: str, id: str, tag: str = "in-domain") -> MonolingualCorpus:
        rng = random.Random(seed)
        lines = []
        for _ in range(n):
            lines.append(self.render(self._walk(rng), side))
        lang = self.source if side == "source" else self.target
        return MonolingualCorpus(id, lang, tag, lines)

    def noise(self, n: int, seed: int, side: str, id: str, tag: str = "noise") -> MonolingualCorpus:
        """Uniformly random word strings over the same vocabulary (no grammar)."""
        rng = random.Random(seed)
        vocab = self.words(side)
        lines = [
            " ".join(rng.choice(vocab) for _ in range(rng.randint(self.min_len, self.max_len)))
            for _ in range(n)
        ]
        lang = self.source if side == "source" else self.target
        return MonolingualCorpus(id, lang, tag, lines)
