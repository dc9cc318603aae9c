"""Word segmentation mirroring the core engine's tokenizer.

The core operates on lowercased whitespace-plus-punctuation word positions
and validates that NLL vectors align with them, so the exporter must
segment text the same way before handing words to the subword tokenizer.
"""

from __future__ import annotations

import re

_WORD_RE = re.compile(r"\w+|[^\w\s]")


def split_words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())
