"""Bilingual and monolingual corpora: loading, cleaning, tagging, splitting."""

from __future__ import annotations

import logging
import math
import random
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Union

log = logging.getLogger(__name__)


class CorpusError(Exception):
    pass


class CorpusEncodingError(CorpusError):
    def __init__(self, path, offset: int, reason: str = ""):
        self.path = str(path)
        self.offset = offset
        super().__init__(f"{path}: invalid UTF-8 at byte offset {offset} {reason}".rstrip())


class AlignmentError(CorpusError):
    pass


class LanguageMismatchError(CorpusError):
    pass


class OverlapError(CorpusError):
    def __init__(self, pairs):
        self.pairs = list(pairs)
        shown = "; ".join(f"{s!r} ||| {t!r}" for s, t in self.pairs[:5])
        more = f" (+{len(self.pairs) - 5} more)" if len(self.pairs) > 5 else ""
        super().__init__(f"{len(self.pairs)} extra pairs overlap train: {shown}{more}")


@dataclass(frozen=True)
class LanguageTag:
    code: str

    def __post_init__(self):
        if not self.code or not self.code.strip():
            raise ValueError("language code must be non-empty")

    def __str__(self) -> str:
        return self.code


def _lang(x: Union[str, LanguageTag]) -> LanguageTag:
    return x if isinstance(x, LanguageTag) else LanguageTag(x)


@dataclass
class MonolingualCorpus:
    id: str
    language: LanguageTag
    source_tag: str
    sentences: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass
class BilingualCorpus:
    """Aligned pairs; each pair is ``(source, target, source_tag)``."""

    id: str
    source_language: LanguageTag
    target_language: LanguageTag
    pairs: list[tuple[str, str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def sources(self) -> list[str]:
        return [p[0] for p in self.pairs]

    @property
    def targets(self) -> list[str]:
        return [p[1] for p in self.pairs]

    def reversed(self, id: str | None = None) -> "BilingualCorpus":
        """Same pairs with source and target swapped (for the opposite direction)."""
        return BilingualCorpus(
            id or f"{self.id}.rev",
            self.target_language,
            self.source_language,
            [(t, s, tag) for s, t, tag in self.pairs],
        )


# ---------------------------------------------------------------- loading


def _read_lines(path) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such corpus file: {path}")
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise CorpusEncodingError(path, e.start, f"({e.reason})") from None
    return text.split("\n") if text else []


def load_monolingual(path, language, id: str, source_tag: str) -> MonolingualCorpus:
    lines = _read_lines(path)
    sentences = [ln.rstrip("\r") for ln in lines if ln.strip()]
    return MonolingualCorpus(id, _lang(language), source_tag, sentences)


def load_bilingual(path, src, tgt, id: str, source_tag: str, target_path=None) -> BilingualCorpus:
    """Load a TSV (``source<TAB>target``) file, or two aligned files.

    When ``target_path`` is given, ``path`` is the source-side file and both
    are read line by line; their non-blank line counts must agree.
    """
    src, tgt = _lang(src), _lang(tgt)
    if target_path is not None:
        s_lines = [ln.rstrip("\r") for ln in _read_lines(path)]
        t_lines = [ln.rstrip("\r") for ln in _read_lines(target_path)]
        # trailing newline yields one empty element
        while s_lines and not s_lines[-1]:
            s_lines.pop()
        while t_lines and not t_lines[-1]:
            t_lines.pop()
        if len(s_lines) != len(t_lines):
            raise AlignmentError(
                f"aligned files differ in length: {path} has {len(s_lines)}, "
                f"{target_path} has {len(t_lines)}"
            )
        pairs = [(s, t, source_tag) for s, t in zip(s_lines, t_lines) if s.strip() or t.strip()]
        return BilingualCorpus(id, src, tgt, pairs)

    pairs = []
    for lineno, line in enumerate(_read_lines(path), 1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise AlignmentError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
        pairs.append((cols[0], cols[1], source_tag))
    return BilingualCorpus(id, src, tgt, pairs)


def save_monolingual(corpus: MonolingualCorpus, path) -> None:
    Path(path).write_text("".join(s + "\n" for s in corpus.sentences), encoding="utf-8")


def save_bilingual(corpus: BilingualCorpus, path, header: dict | None = None) -> None:
    """Write ``source<TAB>target<TAB>source_tag`` rows; optional ``#key=value`` header."""
    lines = []
    for k, v in (header or {}).items():
        lines.append(f"#{k}={v}\n")
    lines.extend(f"{s}\t{t}\t{tag}\n" for s, t, tag in corpus.pairs)
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_bilingual(path, src, tgt, id: str) -> BilingualCorpus:
    """Inverse of :func:`save_bilingual` (keeps per-pair source tags)."""
    pairs = []
    for line in _read_lines(path):
        if not line or line.startswith("#"):
            continue
        s, t, tag = line.split("\t")
        pairs.append((s, t, tag))
    return BilingualCorpus(id, _lang(src), _lang(tgt), pairs)


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    language: str
    source_tag: str
    path: Path


def read_manifest(path) -> list[ManifestEntry]:
    """Parse ``id<TAB>language<TAB>source_tag<TAB>path`` records.

    Relative paths resolve against the manifest's directory. ``language`` is a
    single code for monolingual files and ``src-tgt`` for bilingual TSVs.
    """
    path = Path(path)
    entries = []
    seen = set()
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.rstrip("\r").split("\t")
        if len(cols) != 4:
            raise CorpusError(f"{path}:{lineno}: manifest rows need 4 columns, got {len(cols)}")
        cid, lang, tag, p = cols
        if cid in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate corpus id {cid!r}")
        seen.add(cid)
        p = Path(p)
        if not p.is_absolute():
            p = path.parent / p
        entries.append(ManifestEntry(cid, lang, tag, p))
    return entries


# ---------------------------------------------------------------- combining


def concat_bilingual(corpora: list[BilingualCorpus], id: str) -> BilingualCorpus:
    if not corpora:
        raise CorpusError("nothing to concatenate")
    src, tgt = corpora[0].source_language, corpora[0].target_language
    pairs = []
    for c in corpora:
        if (c.source_language, c.target_language) != (src, tgt):
            raise LanguageMismatchError(
                f"{c.id} is {c.source_language}-{c.target_language}, expected {src}-{tgt}"
            )
        pairs.extend(c.pairs)
    return BilingualCorpus(id, src, tgt, pairs)


def filter_by_source(corpus: BilingualCorpus, exclude_tags: Iterable[str]) -> BilingualCorpus:
    exclude = set(exclude_tags)
    if not exclude:
        return replace(corpus, pairs=list(corpus.pairs))
    pairs = [p for p in corpus.pairs if p[2] not in exclude]
    if corpus.pairs and not pairs:
        log.warning("filter_by_source removed every pair of %s", corpus.id)
    return replace(corpus, pairs=pairs)


def shuffle(corpus: BilingualCorpus, seed: int) -> BilingualCorpus:
    order = list(range(len(corpus)))
    random.Random(seed).shuffle(order)
    return replace(corpus, pairs=[corpus.pairs[i] for i in order])


# ---------------------------------------------------------------- cleaning

_LINK = re.compile(r"^(?:[A-Za-z][A-Za-z0-9+.\-]*://|www\.)", re.IGNORECASE)
DEFAULT_ALLOWED_PUNCT = ".,;:'\"?!-()"
RULE_ORDER = ("hyperlinks", "special_characters", "whitespace", "empty", "code_mixed", "repetitive")


@dataclass(frozen=True)
class CleanRuleSet:
    strip_hyperlinks: bool = True
    strip_special_characters: bool = True
    collapse_whitespace: bool = True
    drop_code_mixed: bool = False
    drop_repetitive: bool = True
    allowed_punctuation: str = DEFAULT_ALLOWED_PUNCT
    code_mix_threshold: float = 0.3
    # language code -> word-list file (one word per line) of words in that language
    wordlists: tuple[tuple[str, str], ...] = ()

    def enabled(self) -> bool:
        return any(
            (self.strip_hyperlinks, self.strip_special_characters, self.collapse_whitespace,
             self.drop_code_mixed, self.drop_repetitive)
        )


@dataclass
class CleanReport:
    input_size: int = 0
    output_size: int = 0
    dropped: dict[str, int] = field(default_factory=lambda: dict.fromkeys(RULE_ORDER, 0))
    modified: dict[str, int] = field(default_factory=lambda: dict.fromkeys(RULE_ORDER, 0))

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped.values())

    def to_text(self) -> str:
        rows = [f"#input={self.input_size}\toutput={self.output_size}"]
        rows += [f"{r}\t{self.dropped[r]}\t{self.modified[r]}" for r in RULE_ORDER]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CleanReport":
        rep = cls()
        for line in text.splitlines():
            if line.startswith("#"):
                kv = dict(part.split("=") for part in line[1:].split("\t"))
                rep.input_size, rep.output_size = int(kv["input"]), int(kv["output"])
            elif line:
                rule, d, m = line.split("\t")
                rep.dropped[rule], rep.modified[rule] = int(d), int(m)
        return rep


def _strip_special(text: str, allowed: str) -> str:
    keep = []
    for ch in text:
        cat = unicodedata.category(ch)
        if ch.isspace() or cat[0] in "LM" or cat == "Nd" or ch in allowed:
            keep.append(ch)
    return "".join(keep)


def _load_wordlists(rules: CleanRuleSet) -> dict[str, frozenset[str]]:
    out = {}
    for lang, path in rules.wordlists:
        words = Path(path).read_text(encoding="utf-8").split()
        out[lang] = frozenset(w.lower() for w in words)
    return out


def is_code_mixed(sentence: str, foreign: frozenset[str], threshold: float) -> bool:
    """True when at least ``threshold`` of the alphabetic tokens are foreign words."""
    tokens = [t.lower() for t in sentence.split() if t.isalpha()]
    if not tokens:
        return False
    hits = sum(t in foreign for t in tokens)
    return hits >= math.ceil(threshold * len(tokens) - 1e-9)


class _Cleaner:
    def __init__(self, rules: CleanRuleSet):
        if not rules.enabled():
            raise ValueError("at least one cleaning rule must be enabled")
        self.rules = rules
        self.lists = _load_wordlists(rules) if rules.drop_code_mixed else {}

    def _is_link(self, tok: str) -> bool:
        if _LINK.match(tok):
            return True
        # stripping special characters must not expose a new link on a second pass
        return self.rules.strip_special_characters and bool(
            _LINK.match(_strip_special(tok, self.rules.allowed_punctuation))
        )

    def transform(self, s: str, report: CleanReport) -> str:
        """Apply the in-place rewrites to one sentence, counting modifications."""
        r = self.rules
        if r.strip_hyperlinks:
            new = re.sub(r"\S+", lambda m: "" if self._is_link(m.group()) else m.group(), s)
            report.modified["hyperlinks"] += new != s
            s = new
        if r.strip_special_characters:
            new = _strip_special(s, r.allowed_punctuation)
            report.modified["special_characters"] += new != s
            s = new
        if r.collapse_whitespace:
            new = " ".join(s.split())
            report.modified["whitespace"] += new != s
            s = new
        return s

    def foreign_words(self, lang: LanguageTag) -> frozenset[str]:
        words = set()
        for code, ws in self.lists.items():
            if code != lang.code:
                words |= ws
        return frozenset(words)


def clean(corpus, rules: CleanRuleSet):
    """Clean a mono- or bilingual corpus; returns ``(cleaned, CleanReport)``.

    Rewrites run first (hyperlinks, special characters, whitespace), then the
    drops (empty, code-mixed, exact duplicates keeping the first occurrence).
    For bilingual corpora a drop on either side removes the pair.
    """
    cl = _Cleaner(rules)
    report = CleanReport(input_size=len(corpus))

    if isinstance(corpus, MonolingualCorpus):
        items = [(cl.transform(s, report),) for s in corpus.sentences]
        langs = [corpus.language]
    else:
        items = [(cl.transform(s, report), cl.transform(t, report), tag) for s, t, tag in corpus.pairs]
        langs = [corpus.source_language, corpus.target_language]

    n_text = len(langs)
    kept = []
    for item in items:
        if any(not x.strip() for x in item[:n_text]):
            report.dropped["empty"] += 1
            continue
        kept.append(item)
    items = kept

    if rules.drop_code_mixed:
        foreign = [cl.foreign_words(lang) for lang in langs]
        kept = []
        for item in items:
            if any(is_code_mixed(x, f, rules.code_mix_threshold) for x, f in zip(item, foreign)):
                report.dropped["code_mixed"] += 1
                continue
            kept.append(item)
        items = kept

    if rules.drop_repetitive:
        seen = set()
        kept = []
        for item in items:
            key = item[:n_text]
            if key in seen:
                report.dropped["repetitive"] += 1
                continue
            seen.add(key)
            kept.append(item)
        items = kept

    report.output_size = len(items)
    if isinstance(corpus, MonolingualCorpus):
        return replace(corpus, sentences=[i[0] for i in items]), report
    return replace(corpus, pairs=[tuple(i) for i in items]), report


# ---------------------------------------------------------------- splitting


@dataclass
class DataSplit:
    train: BilingualCorpus
    valid: BilingualCorpus
    test: BilingualCorpus
    split_seed: int
    variant: str = "default"  # "default" or "newtest"


def make_splits(corpus: BilingualCorpus, ratios=(0.8, 0.1, 0.1), seed: int = 0) -> DataSplit:
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(corpus)
    if n < 3:
        raise CorpusError(f"need at least 3 pairs to split, {corpus.id} has {n}")
    shuffled = shuffle(corpus, seed).pairs
    n_valid = math.floor(ratios[1] * n + 1e-9)
    n_test = math.floor(ratios[2] * n + 1e-9)
    n_train = n - n_valid - n_test

    def part(name, pairs):
        return BilingualCorpus(f"{corpus.id}.{name}", corpus.source_language, corpus.target_language, pairs)

    return DataSplit(
        train=part("train", shuffled[:n_train]),
        valid=part("valid", shuffled[n_train:n_train + n_valid]),
        test=part("test", shuffled[n_train + n_valid:]),
        split_seed=seed,
    )


def expand_eval_sets(split: DataSplit, extra: BilingualCorpus) -> DataSplit:
    """Append general-domain pairs to valid/test (half each, odd one to test)."""
    train_keys = Counter((s, t) for s, t, _ in split.train.pairs)
    overlap = [(s, t) for s, t, _ in extra.pairs if (s, t) in train_keys]
    if overlap:
        raise OverlapError(overlap)
    half = len(extra) // 2
    valid = replace(split.valid, pairs=split.valid.pairs + extra.pairs[:half])
    test = replace(split.test, pairs=split.test.pairs + extra.pairs[half:])
    return DataSplit(split.train, valid, test, split.split_seed, variant="newtest")
