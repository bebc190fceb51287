"""Parser for the presentation text format.

A presentation file looks like::

    # genus-2 surface group
    gens: a b c d
    lambda: 1/6
    rel: a b a' b' c d c' d'

Words are juxtaposed generator names, longest name wins; ``x'`` and
``x^-1`` both denote the inverse and ``x^k`` an integer power.  A
parametrized family of relators is declared as::

    family: a b^(7n+1) a b^(7n+2) for n in 1..2

where exponents in parentheses are integer-affine expressions in ``n`` and
the range is the shipped truncation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .words import (
    Alphabet,
    RelatorFamily,
    RelatorSet,
    Word,
    validate_relator_set,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


_AFFINE_RE = re.compile(r"^([+-]?\d*)n([+-]\d+)?$|^([+-]?\d+)$")


def _parse_affine(text: str) -> tuple[int, int]:
    """Parse '7n+1', 'n', '-n+4', '3n-2' or a plain integer into (coef, const)."""
    m = _AFFINE_RE.match(text.replace(" ", ""))
    if not m:
        raise ParseError(f"bad exponent expression {text!r}")
    if m.group(3) is not None:
        return 0, int(m.group(3))
    coef_txt = m.group(1)
    coef = {"": 1, "+": 1, "-": -1}.get(coef_txt, None)
    if coef is None:
        coef = int(coef_txt)
    const = int(m.group(2)) if m.group(2) else 0
    return coef, const


def _tokenize(alphabet: Alphabet, text: str, allow_n: bool):
    """Yield (gen index, coef, const) template tokens from a word string."""
    names = sorted(alphabet.generators, key=len, reverse=True)
    pos, n = 0, len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        for name in names:
            if text.startswith(name, pos):
                gen = alphabet.generators.index(name)
                pos += len(name)
                break
        else:
            raise ParseError(f"unknown generator at ...{text[pos:pos + 12]!r}")
        coef, const = 0, 1
        if pos < n and text[pos] == "'":
            const = -1
            pos += 1
        elif pos < n and text[pos] == "^":
            pos += 1
            if pos < n and text[pos] == "(":
                end = text.find(")", pos)
                if end < 0:
                    raise ParseError("unclosed '(' in exponent")
                if not allow_n:
                    raise ParseError("parametrized exponent outside a family line")
                coef, const = _parse_affine(text[pos + 1 : end])
                pos = end + 1
            else:
                m = re.match(r"[+-]?\d+", text[pos:])
                if not m:
                    raise ParseError(f"bad exponent at ...{text[pos:pos + 8]!r}")
                const = int(m.group(0))
                pos += m.end()
        yield gen, coef, const


def parse_word_text(alphabet: Alphabet, text: str) -> Word:
    """Parse a concrete word (no parameters); powers are expanded literally."""
    letters: list[int] = []
    for gen, coef, const in _tokenize(alphabet, text, allow_n=False):
        e = const
        code = 2 * gen if e > 0 else 2 * gen + 1
        letters.extend([code] * abs(e))
    return tuple(letters)


@dataclass(frozen=True)
class Presentation:
    """Parsed presentation file: alphabet, explicit relators, families, lambda."""

    alphabet: Alphabet
    relators: tuple[Word, ...]
    families: tuple[RelatorFamily, ...]
    lam: Fraction

    def relator_words(self) -> list[Word]:
        out = list(self.relators)
        for fam in self.families:
            out.extend(fam.members())
        return out

    def to_relator_set(self) -> RelatorSet:
        return validate_relator_set(
            self.relator_words(), self.lam, self.alphabet, families=self.families
        )


_FAMILY_RE = re.compile(r"^(?P<tpl>.*?)\s+for\s+n\s+in\s+(?P<lo>-?\d+)\s*\.\.\s*(?P<hi>-?\d+)\s*$")


def parse_presentation(text: str) -> Presentation:
    alphabet: Optional[Alphabet] = None
    lam: Optional[Fraction] = None
    relators: list[Word] = []
    families: list[RelatorFamily] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        key, _, value = line.partition(":")
        key = key.strip().lower()
        value = value.strip()
        try:
            if key == "gens":
                if alphabet is not None:
                    raise ParseError("duplicate gens line", lineno)
                alphabet = Alphabet(tuple(value.split()))
            elif key == "lambda":
                lam = Fraction(value)
            elif key == "rel":
                if alphabet is None:
                    raise ParseError("rel before gens", lineno)
                relators.append(parse_word_text(alphabet, value))
            elif key == "family":
                if alphabet is None:
                    raise ParseError("family before gens", lineno)
                m = _FAMILY_RE.match(value)
                if not m:
                    raise ParseError("family needs 'for n in lo..hi'", lineno)
                tokens = tuple(_tokenize(alphabet, m.group("tpl"), allow_n=True))
                families.append(
                    RelatorFamily(tokens, int(m.group("lo")), int(m.group("hi")))
                )
            else:
                raise ParseError(f"unknown key {key!r}", lineno)
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
    if alphabet is None:
        raise ParseError("missing gens line")
    if lam is None:
        lam = Fraction(1, 6)
    return Presentation(alphabet, tuple(relators), tuple(families), lam)


def load_presentation(path) -> Presentation:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_presentation(fh.read())
