"""Token-based name matching shared by the sensor catalog and feature registry.

Matching is done on word tokens rather than raw substrings so that short
aliases cannot fire inside unrelated words ("min" inside "dominant").
"""

from __future__ import annotations

import re

# Words may keep the ^ _ - characters that appear inside location ids.
_TOKEN_RE = re.compile(r"[a-z0-9][a-z0-9^_\-]*")


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(_TOKEN_RE.findall(text.lower()))


def normalize(text: str) -> str:
    return " ".join(tokenize(text))


def _contains_sublist(haystack: tuple[str, ...], needle: tuple[str, ...]) -> bool:
    if not needle or len(needle) > len(haystack):
        return False
    span = len(needle)
    return any(haystack[i : i + span] == needle for i in range(len(haystack) - span + 1))


def overlap_score(query_tokens: tuple[str, ...], alias_tokens: tuple[str, ...]) -> int:
    """Length in characters of the contained token run, 0 if no containment."""
    if _contains_sublist(query_tokens, alias_tokens):
        return sum(len(t) for t in alias_tokens)
    if _contains_sublist(alias_tokens, query_tokens):
        return sum(len(t) for t in query_tokens)
    return 0
