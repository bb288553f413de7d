"""Pluggable token counters.

A tokenizer here is any pure function ``str -> int``. The corpus stats and
masking stages never need real subword vocabularies; they only need a
deterministic count, so the built-ins are intentionally simple. Model-specific
tokenizers can be registered by callers.
"""

from __future__ import annotations

from typing import Callable

Tokenizer = Callable[[str], int]


def whitespace_tokens(text: str) -> int:
    """Count whitespace-separated tokens."""
    return len(text.split())


def byte_count(text: str) -> int:
    """Count UTF-8 bytes."""
    return len(text.encode("utf-8"))


TOKENIZERS: dict[str, Tokenizer] = {
    "whitespace": whitespace_tokens,
    "bytes": byte_count,
}


def get_tokenizer(name: str) -> Tokenizer:
    try:
        return TOKENIZERS[name]
    except KeyError:
        raise KeyError(
            f"unknown tokenizer {name!r}; available: {sorted(TOKENIZERS)}"
        ) from None
