"""Frozen tokenizer profiles for word-level metrics.

A profile's behaviour is fixed forever once published under a name and
version; changing the rules means registering a new version.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass


@dataclass(frozen=True)
class TokenizerProfile:
    name: str
    version: str
    normalization: str | None = None  # unicode normal form, e.g. "NFC"
    split_punctuation: bool = False
    lowercase: bool = False

    def tokenize(self, text: str) -> list[str]:
        if self.normalization:
            text = unicodedata.normalize(self.normalization, text)
        if self.lowercase:
            text = text.lower()
        if self.split_punctuation:
            text = "".join(f" {ch} " if _is_punct(ch) else ch for ch in text)
        return text.split()


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


PLAIN = TokenizerProfile("plain", "v1")
STANDARD = TokenizerProfile("standard", "v1", normalization="NFC", split_punctuation=True)

PROFILES = {p.name: p for p in (PLAIN, STANDARD)}


def get_profile(name: str | TokenizerProfile) -> TokenizerProfile:
    if isinstance(name, TokenizerProfile):
        return name
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown tokenizer profile {name!r}; known: {sorted(PROFILES)}") from None
