"""Lipogram toolkit: rewrite text so it avoids a set of forbidden letters.

The package provides two baseline translators (letter deletion and synonym
substitution), a constrained beam-search generator over an n-gram language
model, document cleanup passes, an evaluation suite, and a constraint-strength
sweep harness. See the README for the CLI.
"""

__version__ = "0.1.0"

from .textcore import (
    ConstraintSet,
    FreqTable,
    Token,
    TokenSeq,
    canonical,
    exclusion_fraction,
    letter_frequencies,
    split_paragraphs,
    strip_letters,
    tokenize,
    violates,
)

__all__ = [
    "ConstraintSet",
    "FreqTable",
    "Token",
    "TokenSeq",
    "canonical",
    "exclusion_fraction",
    "letter_frequencies",
    "split_paragraphs",
    "strip_letters",
    "tokenize",
    "violates",
    "__version__",
]
