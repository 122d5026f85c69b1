"""Sentence segmentation and normalization.

Splitting happens before lowercasing (capitalization is a boundary cue);
the output sentences are lowercased and empty ones dropped.
"""

from __future__ import annotations

import re

# sentence-final punctuation (with optional closing quotes/brackets)
# followed by whitespace, or a blank line / newline boundary
_BOUNDARY = re.compile(r"(?<=[.!?])[\"')\]]*\s+|\n+")


def split_sentences(text: str) -> list[str]:
    """Standard segmentation: break after ./!/? runs and at newlines,
    lowercase, drop empties."""
    parts = _BOUNDARY.split(text)
    out = []
    for part in parts:
        if part is None:
            continue
        cleaned = part.strip().lower()
        if cleaned:
            out.append(cleaned)
    return out
