"""Case and diacritic folding used by the rejection filter and dedupe keys.

Folding must treat Turkish text correctly: the dotted/dotless i pair
(``İ/i`` and ``I/ı``) does not survive plain ``str.lower`` round trips, and
``ı`` has no canonical decomposition, so it is mapped explicitly.
"""

from __future__ import annotations

import unicodedata

# Characters with no canonical decomposition that still need an ASCII-ish fold.
_EXPLICIT = str.maketrans({"ı": "i"})


def fold_text(text: str, fold_case: bool = True, fold_diacritics: bool = True) -> str:
    """Fold text for substring matching.

    ``fold_case`` applies Unicode case folding (``İ`` becomes ``i`` plus a
    combining dot). ``fold_diacritics`` decomposes (NFKD), drops combining
    marks, and maps dotless ``ı`` to ``i``, so ``ş/ğ/ç/ö/ü`` collapse to their
    base letters.
    """
    if fold_case:
        text = text.casefold()
    if fold_diacritics:
        decomposed = unicodedata.normalize("NFKD", text)
        text = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
        text = text.translate(_EXPLICIT)
    return text
