"""Corpus-level BLEU with clipped n-gram precision and brevity penalty."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .tokenize import PLAIN, STANDARD, TokenizerProfile, get_profile


@dataclass
class BleuResult:
    score: float
    precisions: list[float]
    bp: float
    hyp_len: int
    ref_len: int
    profile: str
    signature: str
    matches: list[int] = field(default_factory=list)
    totals: list[int] = field(default_factory=list)
    # set when every hypothesis is empty
    degenerate: bool = False


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def signature(profile: TokenizerProfile, max_n: int) -> str:
    return f"{profile.name}+ngram:{max_n}+{profile.version}"


def _check(hypotheses, references):
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ValueError("need at least one segment")


def bleu(hypotheses, references, profile=PLAIN, max_n: int = 4, smooth: str = "none") -> BleuResult:
    """Corpus BLEU, 0-100.

    Matches and totals are summed over all segments before dividing. Orders
    for which the hypotheses contain no n-grams at all (short corpora) are
    left out of the geometric mean. ``smooth="add-one"`` adds one to the
    matches and totals of orders above 1, for segment-level use.
    """
    _check(hypotheses, references)
    profile = get_profile(profile)
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hypotheses, references):
        ht, rt = profile.tokenize(h), profile.tokenize(r)
        hyp_len += len(ht)
        ref_len += len(rt)
        for n in range(1, max_n + 1):
            hc, rc = _ngrams(ht, n), _ngrams(rt, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(len(ht) - n + 1, 0)

    sig = signature(profile, max_n)
    if hyp_len == 0:
        return BleuResult(0.0, [0.0] * max_n, 0.0, 0, ref_len, profile.name, sig, matches, totals, True)

    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    precisions = []
    logs = []
    for n in range(1, max_n + 1):
        m, t = matches[n - 1], totals[n - 1]
        if smooth == "add-one" and n > 1:
            m, t = m + 1, t + 1
        elif smooth != "none" and smooth != "add-one":
            raise ValueError(f"unknown smoothing {smooth!r}")
        if t == 0:
            precisions.append(0.0)
            continue
        p = m / t
        precisions.append(p)
        logs.append(math.log(p) if p > 0 else -math.inf)

    if not logs or any(x == -math.inf for x in logs):
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(logs) / len(logs))
    return BleuResult(score, precisions, bp, hyp_len, ref_len, profile.name, sig, matches, totals)


def sacrebleu(hypotheses, references, max_n: int = 4) -> BleuResult:
    """BLEU under the frozen ``standard`` profile (NFC, punctuation split)."""
    return bleu(hypotheses, references, profile=STANDARD, max_n=max_n)
