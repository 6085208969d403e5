"""Reference translation model: EM-trained subword lexical table plus a
target bigram language model, decoded monotonically with beam search.

Anything implementing :class:`TranslationBackend` can stand in for it; the
back-translation strategies only use ``train`` and ``translate``.
"""

from __future__ import annotations

import ast
import hashlib
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from . import __version__
from .corpus import BilingualCorpus, LanguageTag
from .subword import BpeModel, apply_bpe, decode_bpe

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
BOS, EOS = "<s>", "</s>"
LOG_FLOOR = 1e-10


class FingerprintMismatch(Exception):
    pass


class CorruptModelError(Exception):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 1000
    patience: int = 40
    max_epochs: int = 50
    seed: int = 0
    em_tolerance: float = 1e-6
    lm_smoothing: float = 0.1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class BeamConfig:
    beam_width: int = 5
    max_output_length_factor: float = 1.5
    candidates_per_token: int = 8

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")


@dataclass(frozen=True)
class ExternalModelSpec:
    """Transformer-base settings kept for external neural adapters; never executed here."""

    layers: int = 6
    d_model: int = 512
    d_ff: int = 2048
    heads: int = 8
    d_k: int = 64
    d_v: int = 64
    dropout: float = 0.1
    optimizer: str = "adam"


@dataclass
class TranslatorModel:
    source: LanguageTag
    target: LanguageTag
    lexical_table: dict[str, dict[str, float]]
    bigrams: dict[str, dict[str, float]]
    # probability of any transition not listed in ``bigrams`` for a known history
    lm_unseen: dict[str, float]
    lm_vocab_size: int
    bpe_fingerprint: str
    training_meta: dict = field(default_factory=dict)

    @property
    def direction(self) -> tuple[LanguageTag, LanguageTag]:
        return self.source, self.target

    def lm_logprob(self, prev: str, nxt: str) -> float:
        row = self.bigrams.get(prev)
        if row is not None and nxt in row:
            return math.log(row[nxt])
        unseen = self.lm_unseen.get(prev)
        if unseen is None:
            return -math.log(self.lm_vocab_size)
        return math.log(unseen)

    def digest(self) -> str:
        """Content hash over everything that affects translation."""
        return hashlib.sha256(_body(self).encode("utf-8")).hexdigest()[:16]


class TranslationBackend(Protocol):
    def train(self, pairs: BilingualCorpus, valid: BilingualCorpus | None, bpe: BpeModel,
              config: TrainConfig): ...

    def translate(self, model, sentences: list[str], beam: BeamConfig, bpe: BpeModel) -> list[str]: ...

    def fingerprint(self, model) -> str: ...


# ------------------------------------------------------------------ training


class _Links:
    """Flat arrays describing every (source token, target token) link of a corpus."""

    def __init__(self, src_ids, tgt_ids, type_of: dict):
        link_type, occ, pair_of_occ, src_len = [], [], [], []
        n_occ = 0
        for p, (s, t) in enumerate(zip(src_ids, tgt_ids)):
            for f in t:
                for e in s:
                    link_type.append(type_of.get((e, f), -1))
                    occ.append(n_occ)
                src_len.append(len(s))
                pair_of_occ.append(p)
                n_occ += 1
        self.link_type = np.asarray(link_type, dtype=np.int64)
        self.occ = np.asarray(occ, dtype=np.int64)
        self.n_occ = n_occ
        self.occ_src_len = np.asarray(src_len, dtype=np.float64)
        self.pair_of_occ = np.asarray(pair_of_occ, dtype=np.int64)

    def token_probs(self, t: np.ndarray) -> np.ndarray:
        """p(target token | source sentence) for each target occurrence."""
        if self.n_occ == 0:
            return np.zeros(0)
        vals = np.where(self.link_type >= 0, t[np.maximum(self.link_type, 0)], 0.0)
        return np.bincount(self.occ, weights=vals, minlength=self.n_occ) / self.occ_src_len


def _segment_corpus(corpus: BilingualCorpus, bpe: BpeModel):
    src = [apply_bpe(bpe, s).tokens for s in corpus.sources]
    tgt = [apply_bpe(bpe, t).tokens for t in corpus.targets]
    keep = [i for i, (s, t) in enumerate(zip(src, tgt)) if s and t]
    return [src[i] for i in keep], [tgt[i] for i in keep]


def _bigram_lm(targets: list[list[str]], alpha: float):
    counts: dict[str, dict[str, int]] = {}
    vocab = {EOS}
    for toks in targets:
        vocab.update(toks)
        seq = [BOS] + toks + [EOS]
        for a, b in zip(seq, seq[1:]):
            row = counts.setdefault(a, {})
            row[b] = row.get(b, 0) + 1
    v = len(vocab)
    bigrams, unseen = {}, {}
    for a in sorted(counts):
        row = counts[a]
        total = sum(row.values())
        denom = total + alpha * v
        bigrams[a] = {b: (c + alpha) / denom for b, c in sorted(row.items())}
        unseen[a] = alpha / denom
    return bigrams, unseen, v


def _table_from_array(t: np.ndarray, types: list[tuple[int, int]], vocab_s, vocab_t):
    table: dict[str, dict[str, float]] = {}
    for k, (e, f) in enumerate(types):
        table.setdefault(vocab_s[e], {})[vocab_t[f]] = float(t[k])
    return {e: dict(sorted(row.items())) for e, row in sorted(table.items())}


def train(pairs: BilingualCorpus, valid: BilingualCorpus | None, bpe: BpeModel,
          config: TrainConfig | None = None) -> TranslatorModel:
    """Fit the lexical table by EM and the target bigram LM by counting.

    Each epoch is one EM pass; expected counts are accumulated over
    mini-batches of ``config.batch_size`` pairs and the table is
    renormalised once per epoch, so the training log-likelihood never
    decreases. The returned table is the snapshot with the best validation
    score (mean per-token log-likelihood); training stops after
    ``patience`` epochs without improvement, at ``max_epochs``, or when the
    relative training log-likelihood gain drops below ``em_tolerance``.
    """
    config = config or TrainConfig()
    src_tok, tgt_tok = _segment_corpus(pairs, bpe)
    if not src_tok:
        raise ValueError(f"empty training corpus {pairs.id}")

    vocab_s = sorted({x for s in src_tok for x in s})
    vocab_t = sorted({x for t in tgt_tok for x in t})
    s_idx = {x: i for i, x in enumerate(vocab_s)}
    t_idx = {x: i for i, x in enumerate(vocab_t)}
    src_ids = [[s_idx[x] for x in s] for s in src_tok]
    tgt_ids = [[t_idx[x] for x in t] for t in tgt_tok]

    # link types sorted by (source, target) so array layout is order-independent
    cooc = sorted({(e, f) for s, t in zip(src_ids, tgt_ids) for e in set(s) for f in set(t)})
    type_of = {k: i for i, k in enumerate(cooc)}
    type_src = np.asarray([e for e, _ in cooc], dtype=np.int64)
    n_types = len(cooc)

    order = list(range(len(src_ids)))
    batches = [order[i:i + config.batch_size] for i in range(0, len(order), config.batch_size)]
    random.Random(config.seed).shuffle(batches)
    batch_links = [
        _Links([src_ids[i] for i in b], [tgt_ids[i] for i in b], type_of) for b in batches
    ]

    if valid is not None and len(valid):
        v_src, v_tgt = _segment_corpus(valid, bpe)
        v_links = _Links(
            [[s_idx.get(x, -1) for x in s] for s in v_src],
            [[t_idx.get(x, -1) for x in t] for t in v_tgt],
            type_of,
        )
    else:
        log.warning("no validation data for %s; early stopping uses training likelihood", pairs.id)
        v_links = None

    # uniform start over co-occurring targets
    row_size = np.bincount(type_src, minlength=len(vocab_s)).astype(np.float64)
    t = 1.0 / row_size[type_src]

    score_links = v_links if v_links is not None else _Links(src_ids, tgt_ids, type_of)

    def valid_score(tab):
        probs = score_links.token_probs(tab)
        return float(np.mean(np.log(np.maximum(probs, LOG_FLOOR)))) if probs.size else 0.0

    history = []
    best_score, best_t, best_epoch = valid_score(t), t.copy(), 0
    prev_ll = None
    for epoch in range(1, config.max_epochs + 1):
        counts = np.zeros(n_types)
        ll = 0.0
        for links in batch_links:
            vals = t[links.link_type]
            denom = np.bincount(links.occ, weights=vals, minlength=links.n_occ)
            ll += float(np.sum(np.log(denom / links.occ_src_len)))
            counts += np.bincount(links.link_type, weights=vals / denom[links.occ], minlength=n_types)
        totals = np.bincount(type_src, weights=counts, minlength=len(vocab_s))
        t = counts / totals[type_src]
        score = valid_score(t)
        history.append({"epoch": epoch, "train_ll": ll, "valid": score})
        if score > best_score:
            best_score, best_t, best_epoch = score, t.copy(), epoch
        if epoch - best_epoch >= config.patience:
            break
        if prev_ll is not None and abs(ll - prev_ll) <= config.em_tolerance * abs(prev_ll):
            break
        prev_ll = ll

    bigrams, unseen, v = _bigram_lm(tgt_tok, config.lm_smoothing)
    meta = {
        "epochs": len(history),
        "best_epoch": best_epoch,
        "valid_score": best_score,
        "seed": config.seed,
        "history": history,
    }
    return TranslatorModel(
        pairs.source_language, pairs.target_language,
        _table_from_array(best_t, cooc, vocab_s, vocab_t),
        bigrams, unseen, v, bpe.fingerprint, meta,
    )


# ------------------------------------------------------------------ decoding


def _candidates(model: TranslatorModel, token: str, k: int) -> list[tuple[str, float]]:
    row = model.lexical_table.get(token)
    if not row:
        return [(token, 0.0)]
    ranked = sorted(row.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return [(w, math.log(p)) for w, p in ranked if p > 0] or [(token, 0.0)]


def _beam(model: TranslatorModel, tokens: list[str], width: int, cands: list) -> tuple[float, tuple[str, ...]]:
    hyps: list[tuple[float, tuple[str, ...]]] = [(0.0, ())]
    for options in cands:
        best_by_last: dict[str, tuple[float, tuple[str, ...]]] = {}
        for score, out in hyps:
            prev = out[-1] if out else BOS
            for w, lex in options:
                s = score + lex + model.lm_logprob(prev, w)
                cur = best_by_last.get(w)
                new = (s, out + (w,))
                if cur is None or (-s, new[1]) < (-cur[0], cur[1]):
                    best_by_last[w] = new
        hyps = sorted(best_by_last.values(), key=lambda h: (-h[0], h[1]))[:width]
    finished = [(s + model.lm_logprob(out[-1], EOS), out) for s, out in hyps]
    return min(finished, key=lambda h: (-h[0], h[1]))


def beam_search(model: TranslatorModel, tokens: list[str], beam: BeamConfig) -> tuple[list[str], float]:
    """Monotone decoding: one target subword per source subword.

    Hypotheses ending in the same target token are recombined, since the
    bigram LM cannot tell them apart later. Plain beam search can score worse
    with a wider beam, so the result is the best over beams of width
    1..``beam_width``; width 1 is exactly greedy decoding.
    """
    if not tokens:
        return [], model.lm_logprob(BOS, EOS)
    k = max(beam.candidates_per_token, 1)
    cache: dict[str, list[tuple[str, float]]] = {}
    cands = []
    for tok in tokens:
        if tok not in cache:
            cache[tok] = _candidates(model, tok, k)
        cands.append(cache[tok])
    best = None
    for width in range(1, beam.beam_width + 1):
        score, out = _beam(model, tokens, width, cands)
        if best is None or (-score, out) < (-best[0], best[1]):
            best = (score, out)
    score, out = best
    limit = max(1, math.floor(beam.max_output_length_factor * len(tokens)))
    return list(out[:limit]), score


def translate(model: TranslatorModel, sentences: list[str], beam: BeamConfig | None = None,
              bpe: BpeModel | None = None) -> list[str]:
    if bpe is None:
        raise ValueError("translate needs the run's BPE model")
    if bpe.fingerprint != model.bpe_fingerprint:
        raise FingerprintMismatch(
            f"model was trained with BPE {model.bpe_fingerprint}, got {bpe.fingerprint}"
        )
    beam = beam or BeamConfig()
    out = []
    for s in sentences:
        toks, _ = beam_search(model, apply_bpe(bpe, s).tokens, beam)
        out.append(decode_bpe(toks, strict=False, marker=bpe.end_of_word_marker))
    return out


class LexicalBackend:
    """The built-in backend, as an object for code that takes a backend."""

    name = "lexical-em"

    def train(self, pairs, valid, bpe, config):
        return train(pairs, valid, bpe, config)

    def translate(self, model, sentences, beam, bpe):
        return translate(model, sentences, beam, bpe)

    def fingerprint(self, model) -> str:
        return model.bpe_fingerprint

    def save(self, model, path):
        save_model(model, path)

    def load(self, path):
        return load_model(path)


# ------------------------------------------------------------------ persistence


def _body(model: TranslatorModel) -> str:
    lines = [
        f"direction\t{model.source.code}\t{model.target.code}",
        f"bpe_fingerprint\t{model.bpe_fingerprint}",
        f"lm_vocab_size\t{model.lm_vocab_size}",
        "[lexical]",
    ]
    for e, row in model.lexical_table.items():
        lines.extend(f"{e}\t{f}\t{p!r}" for f, p in row.items())
    lines.append("[bigram]")
    for a, row in model.bigrams.items():
        lines.extend(f"{a}\t{b}\t{p!r}" for b, p in row.items())
    lines.append("[lm_unseen]")
    lines.extend(f"{a}\t{p!r}" for a, p in model.lm_unseen.items())
    return "\n".join(lines) + "\n"


def save_model(model: TranslatorModel, path) -> None:
    """Write the line-oriented model format.

    Layout: a ``#btkit-model`` header (format and tool versions), ``meta``
    lines, the body (direction, fingerprint, ``[lexical]`` ``src tgt prob``
    triples, ``[bigram]`` ``prev next prob`` triples, ``[lm_unseen]``), and
    an ``[end]`` trailer with the body's sha256.
    """
    body = _body(model)
    meta = {k: v for k, v in model.training_meta.items() if k != "history"}
    head = [f"#btkit-model\tformat={FORMAT_VERSION}\ttool={__version__}"]
    head += [f"meta\t{k}\t{v!r}" for k, v in sorted(meta.items())]
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    Path(path).write_text("\n".join(head) + "\n" + body + f"[end]\t{digest}\n", encoding="utf-8")


def load_model(path) -> TranslatorModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise CorruptModelError(f"{path}: not UTF-8 ({e})") from None
    lines = text.split("\n")
    if not lines or not lines[0].startswith("#btkit-model"):
        raise CorruptModelError(f"{path}: missing model header")
    header = dict(kv.split("=", 1) for kv in lines[0].split("\t")[1:])
    if int(header.get("format", -1)) != FORMAT_VERSION:
        raise CorruptModelError(f"{path}: unsupported model format {header.get('format')}")
    end = [i for i, ln in enumerate(lines) if ln.startswith("[end]\t")]
    if not end:
        raise CorruptModelError(f"{path}: truncated (no [end] trailer)")
    end_i = end[-1]
    meta_lines = [ln for ln in lines[1:end_i] if ln.startswith("meta\t")]
    body_lines = lines[1 + len(meta_lines):end_i]
    body = "\n".join(body_lines) + "\n"
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != lines[end_i].split("\t")[1]:
        raise CorruptModelError(f"{path}: checksum mismatch")

    meta = {}
    for ln in meta_lines:
        _, k, v = ln.split("\t", 2)
        meta[k] = _literal(v)
    try:
        _, src, tgt = body_lines[0].split("\t")
        fp = body_lines[1].split("\t")[1]
        v = int(body_lines[2].split("\t")[1])
        lex, big, unseen = {}, {}, {}
        section = None
        for ln in body_lines[3:]:
            if ln.startswith("["):
                section = ln
                continue
            cols = ln.split("\t")
            if section == "[lexical]":
                lex.setdefault(cols[0], {})[cols[1]] = float(cols[2])
            elif section == "[bigram]":
                big.setdefault(cols[0], {})[cols[1]] = float(cols[2])
            elif section == "[lm_unseen]":
                unseen[cols[0]] = float(cols[1])
            else:
                raise CorruptModelError(f"{path}: data outside a section: {ln!r}")
    except (IndexError, ValueError) as e:
        raise CorruptModelError(f"{path}: malformed body ({e})") from None
    return TranslatorModel(LanguageTag(src), LanguageTag(tgt), lex, big, unseen, v, fp, meta)


def _literal(v: str):
    try:
        return ast.literal_eval(v)
    except (ValueError, SyntaxError):
        return v
