"""Translation edit rate with greedy block shifts."""

from __future__ import annotations

from dataclasses import dataclass

from .tokenize import PLAIN, get_profile

MAX_SHIFT_LEN = 10


@dataclass
class TerResult:
    score: float
    edits: int
    insertions: int
    deletions: int
    substitutions: int
    shifts: int
    ref_length: int


def edit_distance(hyp: list[str], ref: list[str]) -> int:
    prev = list(range(len(ref) + 1))
    for i in range(1, len(hyp) + 1):
        cur = [i] + [0] * len(ref)
        hi = hyp[i - 1]
        for j in range(1, len(ref) + 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (hi != ref[j - 1]))
        prev = cur
    return prev[-1]


def edit_ops(hyp: list[str], ref: list[str]) -> tuple[int, int, int]:
    """Itemize a minimal edit script as ``(insertions, deletions, substitutions)``.

    Insertions add reference words missing from the hypothesis. Backtrace
    prefers diagonal moves, then deletions.
    """
    n, m = len(hyp), len(ref)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]))
    ins = dels = subs = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]):
            subs += hyp[i - 1] != ref[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return ins, dels, subs


def _destinations(rest: list[str], ref: list[str], j: int, length: int):
    """Insertion points in ``rest`` whose context agrees with ``ref[j:j+length]``."""
    end = j + length
    for dest in range(len(rest) + 1):
        if (
            dest == j
            or (dest == 0 and j == 0)
            or (dest == len(rest) and end == len(ref))
            or (j > 0 and dest > 0 and rest[dest - 1] == ref[j - 1])
            or (end < len(ref) and dest < len(rest) and rest[dest] == ref[end])
        ):
            yield dest


def _best_shift(hyp: list[str], ref: list[str], cur: int):
    """Return ``(gain, length, start, dest, shifted)`` of the best shift, or None.

    Only blocks that occur verbatim in the reference are moved, and only to
    spots where a neighbouring word (or the sentence edge, or the same index)
    agrees with that reference occurrence. Ties: larger gain, then smaller
    block, then leftmost start, then leftmost destination.
    """
    best = None
    seen = set()
    for i in range(len(hyp)):
        for j in range(len(ref)):
            length = 0
            while (i + length < len(hyp) and j + length < len(ref) and length < MAX_SHIFT_LEN
                   and hyp[i + length] == ref[j + length]):
                length += 1
                rest = hyp[:i] + hyp[i + length:]
                block = hyp[i:i + length]
                for dest in _destinations(rest, ref, j, length):
                    if dest == i or (i, length, dest) in seen:
                        continue
                    seen.add((i, length, dest))
                    shifted = rest[:dest] + block + rest[dest:]
                    gain = cur - edit_distance(shifted, ref)
                    key = (-gain, length, i, dest)
                    if best is None or key < best[0]:
                        best = (key, shifted)
    if best is None:
        return None
    (neg_gain, length, i, dest), shifted = best
    return -neg_gain, length, i, dest, shifted


def segment_ter(hyp: list[str], ref: list[str]) -> tuple[int, int, int, int]:
    """Greedy TER edits for one tokenized segment: ``(ins, dels, subs, shifts)``.

    Shifts are applied while the best one lowers the edit distance by more
    than the shift itself costs.
    """
    words = list(hyp)
    shifts = 0
    cur = edit_distance(words, ref)
    while cur > 0:
        found = _best_shift(words, ref, cur)
        if found is None or found[0] <= 1:
            break
        words = found[4]
        cur -= found[0]
        shifts += 1
    ins, dels, subs = edit_ops(words, ref)
    return ins, dels, subs, shifts


def ter(hypotheses, references, profile=PLAIN) -> TerResult:
    """Corpus TER: 100 * total edits / total reference words."""
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ValueError("need at least one segment")
    profile = get_profile(profile)
    tot = [0, 0, 0, 0]
    ref_len = 0
    for k, (h, r) in enumerate(zip(hypotheses, references)):
        rt = profile.tokenize(r)
        if not rt:
            raise ValueError(f"empty reference at segment {k}")
        ref_len += len(rt)
        for idx, v in enumerate(segment_ter(profile.tokenize(h), rt)):
            tot[idx] += v
    edits = sum(tot)
    return TerResult(100.0 * edits / ref_len, edits, tot[0], tot[1], tot[2], tot[3], ref_len)
