"""Character n-gram F-score (ChrF); beta=2 gives ChrF2."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass


@dataclass
class ChrfResult:
    score: float
    beta: float
    char_order: int
    precision: float
    recall: float


def f_beta(precision: float, recall: float, beta: float) -> float:
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0:
        return 0.0
    return (1 + b2) * precision * recall / denom


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i:i + n] for i in range(len(text) - n + 1))


def segment_chrf(hyp: str, ref: str, beta: float = 2.0, char_order: int = 6,
                 skip_empty_orders: bool = True) -> tuple[float, float, float]:
    """Return ``(F, P, R)`` in [0, 1] for one segment."""
    h = "".join(hyp.split())
    r = "".join(ref.split())
    ps, rs = [], []
    for n in range(1, char_order + 1):
        rc = _char_ngrams(r, n)
        if not rc and skip_empty_orders:
            continue
        hc = _char_ngrams(h, n)
        hit = sum(min(c, rc[g]) for g, c in hc.items())
        h_total, r_total = sum(hc.values()), sum(rc.values())
        ps.append(hit / h_total if h_total else 0.0)
        rs.append(hit / r_total if r_total else 0.0)
    if not ps:
        # reference has no characters at all
        return (1.0, 1.0, 1.0) if not h else (0.0, 0.0, 0.0)
    p, rec = sum(ps) / len(ps), sum(rs) / len(rs)
    return f_beta(p, rec, beta), p, rec


def chrf(hypotheses, references, beta: float = 2.0, char_order: int = 6,
         skip_empty_orders: bool = True) -> ChrfResult:
    """Corpus ChrF as the mean of segment scores, 0-100."""
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ValueError("need at least one segment")
    segs = [segment_chrf(h, r, beta, char_order, skip_empty_orders) for h, r in zip(hypotheses, references)]
    n = len(segs)
    return ChrfResult(
        score=100.0 * sum(s[0] for s in segs) / n,
        beta=beta,
        char_order=char_order,
        precision=sum(s[1] for s in segs) / n,
        recall=sum(s[2] for s in segs) / n,
    )
