"""Translation quality metrics: BLEU, standardized BLEU, ChrF, TER."""

from __future__ import annotations

from dataclasses import dataclass

from .bleu import BleuResult, bleu, sacrebleu
from .chrf import ChrfResult, chrf
from .ter import TerResult, ter
from .tokenize import PLAIN, PROFILES, STANDARD, TokenizerProfile, get_profile


@dataclass
class EvalResult:
    bleu: BleuResult
    sacrebleu: BleuResult
    chrf2: ChrfResult
    ter: TerResult
    gain: float | None = None

    def row(self) -> dict:
        return {
            "BLEU": self.bleu.score,
            "Gain": self.gain,
            "SacreBLEU": self.sacrebleu.score,
            "chrF2": self.chrf2.score,
            "TER": self.ter.score,
        }


def gain(score: float, baseline: float | BleuResult | EvalResult | None, ndigits: int = 2) -> float | None:
    """BLEU delta against a baseline, rounded to the report precision."""
    if baseline is None:
        return None
    if isinstance(baseline, EvalResult):
        baseline = baseline.bleu
    if isinstance(baseline, BleuResult):
        baseline = baseline.score
    return round(score - baseline, ndigits)


def evaluate_all(hypotheses, references, baseline=None, profile=PLAIN) -> EvalResult:
    b = bleu(hypotheses, references, profile=profile)
    return EvalResult(
        bleu=b,
        sacrebleu=sacrebleu(hypotheses, references),
        chrf2=chrf(hypotheses, references, beta=2.0),
        ter=ter(hypotheses, references, profile=profile),
        gain=gain(b.score, baseline),
    )


__all__ = [
    "BleuResult", "ChrfResult", "EvalResult", "PLAIN", "PROFILES", "STANDARD", "TerResult",
    "TokenizerProfile", "bleu", "chrf", "evaluate_all", "gain", "get_profile", "sacrebleu", "ter",
]
