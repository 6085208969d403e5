"""Byte-pair-encoding subword segmentation with one joint model per run."""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import BilingualCorpus, MonolingualCorpus

MARKER = "</w>"
FORMAT_HEADER = "#bpe"


class BpeError(Exception):
    pass


@dataclass(frozen=True)
class BpeModel:
    merges: tuple[tuple[str, str], ...]
    vocab: frozenset[str]
    target_vocab_size: int
    end_of_word_marker: str = MARKER
    _ranks: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_ranks", {m: i for i, m in enumerate(self.merges)})

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for a, b in self.merges:
            h.update(f"{a} {b}\n".encode("utf-8"))
        return h.hexdigest()[:16]

    def segment_word(self, word: str) -> list[str]:
        return _segment(word, self._ranks, self.end_of_word_marker)


@dataclass
class TokenSeq:
    tokens: list[str]
    marker: str = MARKER

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def _word_symbols(word: str, marker: str) -> tuple[str, ...]:
    return tuple(word[:-1]) + (word[-1] + marker,)


def _segment(word: str, ranks: dict, marker: str) -> list[str]:
    syms = list(_word_symbols(word, marker))
    while len(syms) > 1:
        best = None
        for i in range(len(syms) - 1):
            r = ranks.get((syms[i], syms[i + 1]))
            if r is not None and (best is None or r < best[0]):
                best = (r, i)
        if best is None:
            break
        pair = (syms[best[1]], syms[best[1] + 1])
        # merge every occurrence of this pair left to right, as learning did
        out, i = [], 0
        while i < len(syms):
            if i < len(syms) - 1 and (syms[i], syms[i + 1]) == pair:
                out.append(syms[i] + syms[i + 1])
                i += 2
            else:
                out.append(syms[i])
                i += 1
        syms = out
    return syms


def _texts(corpora) -> list[str]:
    texts = []
    for c in corpora:
        if isinstance(c, MonolingualCorpus):
            texts.extend(c.sentences)
        elif isinstance(c, BilingualCorpus):
            texts.extend(c.sources)
            texts.extend(c.targets)
        elif isinstance(c, str):
            texts.append(c)
        else:
            texts.extend(c)
    return texts


def learn_bpe(corpora, target_vocab_size: int, marker: str = MARKER) -> BpeModel:
    """Greedy BPE over word frequencies of all given text.

    ``corpora`` may mix MonolingualCorpus, BilingualCorpus (both sides are
    used) and plain lists of sentences. The base vocabulary holds every
    character plus its end-of-word form; merges are added until the vocabulary
    reaches ``target_vocab_size`` or no pair occurs at least twice. Ties go to
    the lexicographically smallest pair.
    """
    words = Counter()
    for line in _texts(corpora):
        for w in line.split():
            if marker in w:
                raise BpeError(f"reserved marker {marker!r} found in input word {w!r}")
            words[w] += 1
    if not words:
        raise BpeError("cannot learn BPE from an empty corpus")
    chars = {ch for w in words for ch in w}
    if target_vocab_size <= len(chars):
        raise BpeError(
            f"target_vocab_size={target_vocab_size} must exceed the {len(chars)} distinct characters"
        )

    vocab_words = {_word_symbols(w, marker): f for w, f in words.items()}
    vocab = {s for syms in vocab_words for s in syms}
    if target_vocab_size < len(vocab):
        raise BpeError(
            f"target_vocab_size={target_vocab_size} is below the {len(vocab)} base symbols "
            "(characters and their end-of-word forms)"
        )
    merges: list[tuple[str, str]] = []

    # pair -> count and pair -> set of words containing it, updated incrementally
    stats: Counter = Counter()
    where: dict[tuple[str, str], set] = {}
    for syms, f in vocab_words.items():
        for pair in zip(syms, syms[1:]):
            stats[pair] += f
            where.setdefault(pair, set()).add(syms)

    while len(vocab) < target_vocab_size and stats:
        top = max(stats.values())
        if top < 2:
            break
        pair = min(p for p, c in stats.items() if c == top)
        merges.append(pair)
        merged = pair[0] + pair[1]
        vocab.add(merged)
        for syms in list(where.get(pair, ())):
            f = vocab_words.pop(syms, None)
            if f is None:
                continue
            for old in zip(syms, syms[1:]):
                stats[old] -= f
                if stats[old] <= 0:
                    del stats[old]
                where[old].discard(syms)
            new, i = [], 0
            while i < len(syms):
                if i < len(syms) - 1 and (syms[i], syms[i + 1]) == pair:
                    new.append(merged)
                    i += 2
                else:
                    new.append(syms[i])
                    i += 1
            new = tuple(new)
            vocab_words[new] = vocab_words.get(new, 0) + f
            for p in zip(new, new[1:]):
                stats[p] += f
                where.setdefault(p, set()).add(new)
        stats.pop(pair, None)
        where.pop(pair, None)

    return BpeModel(tuple(merges), frozenset(vocab), target_vocab_size, marker)


def apply_bpe(model: BpeModel, sentence: str) -> TokenSeq:
    tokens: list[str] = []
    for w in sentence.split():
        if model.end_of_word_marker in w:
            raise BpeError(f"reserved marker found in input word {w!r}")
        tokens.extend(model.segment_word(w))
    return TokenSeq(tokens, model.end_of_word_marker)


def decode_bpe(tokens, strict: bool = True, marker: str = MARKER) -> str:
    """Join subword tokens back into text.

    With ``strict`` a marker anywhere but the end of a token, or a final
    token without one, raises :class:`BpeError`. Non-strict decoding (used
    for model output) treats the sequence end as a word boundary.
    """
    if isinstance(tokens, TokenSeq):
        marker = tokens.marker
        tokens = tokens.tokens
    words, cur = [], []
    for tok in tokens:
        body = tok[: -len(marker)] if tok.endswith(marker) else tok
        if marker in body:
            if strict:
                raise BpeError(f"marker inside token {tok!r}")
            body = body.replace(marker, "")
        cur.append(body)
        if tok.endswith(marker):
            words.append("".join(cur))
            cur = []
    if cur:
        if strict:
            raise BpeError("token sequence does not end at a word boundary")
        words.append("".join(cur))
    return " ".join(w for w in words if w)


def save_bpe(model: BpeModel, path) -> None:
    merged = {a + b for a, b in model.merges}
    base = sorted(s for s in model.vocab if s not in merged)
    lines = [
        f"{FORMAT_HEADER} fingerprint={model.fingerprint} target_vocab_size={model.target_vocab_size}",
        "#base " + " ".join(base),
    ]
    lines += [f"{a} {b}" for a, b in model.merges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_bpe(path) -> BpeModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(FORMAT_HEADER):
        raise BpeError(f"{path}: missing BPE header")
    meta = dict(kv.split("=", 1) for kv in lines[0].split()[1:])
    if len(lines) < 2 or not lines[1].startswith("#base"):
        raise BpeError(f"{path}: missing base-symbol line")
    vocab = set(lines[1].split()[1:])
    merges = []
    for line in lines[2:]:
        a, b = line.split(" ")
        merges.append((a, b))
        vocab.add(a + b)
    model = BpeModel(tuple(merges), frozenset(vocab), int(meta["target_vocab_size"]))
    if model.fingerprint != meta["fingerprint"]:
        raise BpeError(f"{path}: fingerprint mismatch ({model.fingerprint} != {meta['fingerprint']})")
    return model
