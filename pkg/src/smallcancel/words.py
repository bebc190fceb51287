"""Alphabets, words over signed generators, reductions, and relator sets.

A word is a tuple of letter codes.  Generator ``i`` of the alphabet gets the
positive letter code ``2*i`` and its formal inverse the code ``2*i + 1``, so
``code ^ 1`` inverts a letter and the natural integer order on codes is the
fixed total order on signed letters (each generator before its inverse,
generators in alphabet order).  ShortLex on words is therefore plain tuple
comparison of ``(len(w), w)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

Word = tuple[int, ...]

EPSILON: Word = ()

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")

# Characters with a meaning in the presentation file format; generator
# names must avoid them.
RESERVED_CHARS = set("#:^'()., \t\r\n-+")


class WordError(ValueError):
    pass


class ValidationError(ValueError):
    """Raised when a relator set fails validation; carries the violations."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = tuple(violations)
        msg = "; ".join(str(v) for v in violations)
        super().__init__(f"invalid relator set: {msg}")


@dataclass(frozen=True)
class Violation:
    rule: str
    relator_index: int
    detail: str

    def __str__(self) -> str:
        return f"[{self.rule}] relator #{self.relator_index}: {self.detail}"


@dataclass(frozen=True)
class Alphabet:
    """An ordered, finite set of generator names."""

    generators: tuple[str, ...]

    def __post_init__(self):
        if not self.generators:
            raise WordError("alphabet needs at least one generator")
        seen = set()
        for name in self.generators:
            if not name or not _NAME_RE.fullmatch(name):
                raise WordError(f"bad generator name {name!r}")
            if set(name) & RESERVED_CHARS:
                raise WordError(f"generator name {name!r} uses a reserved character")
            if name in seen:
                raise WordError(f"duplicate generator {name!r}")
            seen.add(name)

    @property
    def size(self) -> int:
        return len(self.generators)

    @property
    def num_letters(self) -> int:
        return 2 * len(self.generators)

    def letter(self, name: str, sign: int = 1) -> int:
        i = self.generators.index(name)
        return 2 * i if sign > 0 else 2 * i + 1

    def letter_name(self, code: int) -> str:
        name = self.generators[code // 2]
        return name if code % 2 == 0 else name + "'"

    def word_str(self, w: Word) -> str:
        """Human-readable word; inverse letters get a trailing apostrophe."""
        if not w:
            return "1"
        return " ".join(self.letter_name(c) for c in w)

    def parse_word(self, text: str) -> Word:
        from .presentation import parse_word_text

        return parse_word_text(self, text)


def letter_inverse(code: int) -> int:
    return code ^ 1


def inverse_word(w: Word) -> Word:
    return tuple(c ^ 1 for c in reversed(w))


def free_reduce(w: Iterable[int]) -> Word:
    """The unique freely reduced word equal to ``w`` in the free group."""
    out: list[int] = []
    for c in w:
        if out and out[-1] == c ^ 1:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def is_freely_reduced(w: Word) -> bool:
    return all(w[i] != w[i + 1] ^ 1 for i in range(len(w) - 1))


def is_cyclically_reduced(w: Word) -> bool:
    if not is_freely_reduced(w):
        return False
    return len(w) < 2 or w[0] != w[-1] ^ 1


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Return ``(core, conjugator)`` with ``w = conjugator core conjugator^-1``
    in the free group and ``core`` cyclically reduced."""
    core = list(free_reduce(w))
    conj: list[int] = []
    while len(core) >= 2 and core[0] == core[-1] ^ 1:
        conj.append(core[0])
        core = core[1:-1]
    return tuple(core), tuple(conj)


def cyclic_shift(w: Word, k: int) -> Word:
    if not w:
        return w
    k %= len(w)
    return w[k:] + w[:k]


def closure_list(w: Word) -> list[Word]:
    """All distinct cyclic shifts of ``w`` and of its inverse, in a fixed
    order: shifts of ``w`` by 0,1,... then shifts of the inverse, first
    occurrences kept."""
    if not w:
        raise WordError("closure of the empty word is undefined")
    if not is_cyclically_reduced(w):
        raise WordError(f"word is not cyclically reduced: {w}")
    seen: dict[Word, None] = {}
    for base in (w, inverse_word(w)):
        for k in range(len(base)):
            seen.setdefault(cyclic_shift(base, k), None)
    return list(seen)


def closure_star(w: Word) -> set[Word]:
    return set(closure_list(w))


def minimal_period(w: Word) -> int:
    """Smallest p > 0 with shift(w, p) == w; equals len(w) unless w is a
    proper power of its length-p prefix."""
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and cyclic_shift(w, p) == w:
            return p
    return n


def is_proper_power(w: Word) -> bool:
    return len(w) > 0 and minimal_period(w) < len(w)


def shortlex_key(w: Word) -> tuple[int, Word]:
    return (len(w), w)


def shortlex_less(u: Word, v: Word) -> bool:
    return (len(u), u) < (len(v), v)


@dataclass(frozen=True)
class RelatorFamily:
    """A parametrized relator template r_n with integer-affine exponents.

    ``tokens`` is a sequence of (generator index, coef, const) meaning
    gen^(coef*n + const).  The family's index set is n >= lo; the shipped
    truncation keeps lo <= n <= hi.
    """

    tokens: tuple[tuple[int, int, int], ...]
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise WordError(f"empty family range {self.lo}..{self.hi}")

    def instantiate(self, n: int) -> Word:
        letters: list[int] = []
        for gen, coef, const in self.tokens:
            e = coef * n + const
            code = 2 * gen if e > 0 else 2 * gen + 1
            letters.extend([code] * abs(e))
        return tuple(letters)

    def length_at(self, n: int) -> int:
        return sum(abs(coef * n + const) for _, coef, const in self.tokens)

    def members(self) -> list[Word]:
        return [self.instantiate(n) for n in range(self.lo, self.hi + 1)]

    def min_excluded_length(self) -> int:
        """Shortest relator of the family with index beyond the truncation.

        Each |coef*n + const| is nondecreasing once n passes -const/coef, so
        the minimum over n > hi is attained no later than one step past the
        last breakpoint."""
        import math

        start = self.hi + 1
        last_break = start
        for _, coef, const in self.tokens:
            if coef != 0:
                last_break = max(last_break, math.ceil(Fraction(-const, coef)))
        return min(self.length_at(n) for n in range(start, last_break + 2))


@dataclass(frozen=True)
class RelatorSet:
    """A validated set of relators with its closure statistics.

    Construct through :func:`validate_relator_set`; the constructor itself
    trusts its inputs.
    """

    alphabet: Alphabet
    relators: tuple[Word, ...]
    lam: Fraction
    proper_power_flags: tuple[bool, ...]
    closure_size: int
    families: tuple[RelatorFamily, ...] = ()

    def closure_of(self, i: int) -> list[Word]:
        return closure_list(self.relators[i])

    def closure(self) -> list[Word]:
        out: dict[Word, None] = {}
        for r in self.relators:
            for w in closure_list(r):
                out.setdefault(w, None)
        return list(out)

    def min_relator_length(self) -> Optional[int]:
        return min((len(r) for r in self.relators), default=None)

    def all_even(self) -> bool:
        return all(len(r) % 2 == 0 for r in self.relators)

    def is_free(self) -> bool:
        return not self.relators


def relator_violations(relators: Sequence[Word], alphabet: Alphabet) -> list[Violation]:
    """Check cyclic reducedness, nonemptiness, letter range, and cyclic
    minimality.  Each violation names the offending relator and rule."""
    violations: list[Violation] = []
    for i, r in enumerate(relators):
        if not r:
            violations.append(Violation("empty-relator", i, "relator is the empty word"))
            continue
        bad = [c for c in r if not (0 <= c < alphabet.num_letters)]
        if bad:
            violations.append(Violation("unknown-letter", i, f"letter codes {bad} not in alphabet"))
            continue
        if not is_cyclically_reduced(r):
            violations.append(
                Violation("not-cyclically-reduced", i, alphabet.word_str(r))
            )
    # Cyclic minimality: no relator may lie in the closure of another, and
    # no duplicates.  Only checked among well-formed relators.
    ok = [i for i, r in enumerate(relators) if r and is_cyclically_reduced(r)]
    closure_cache = {i: closure_star(relators[i]) for i in ok}
    for ai in range(len(ok)):
        for bi in range(ai + 1, len(ok)):
            i, j = ok[ai], ok[bi]
            if relators[j] in closure_cache[i]:
                violations.append(
                    Violation(
                        "not-cyclically-minimal",
                        j,
                        f"lies in the closure of relator #{i} "
                        f"({alphabet.word_str(relators[i])})",
                    )
                )
    return violations


def validate_relator_set(
    relators: Sequence[Word],
    lam: Fraction,
    alphabet: Alphabet,
    families: Sequence[RelatorFamily] = (),
) -> RelatorSet:
    """Validate and build a :class:`RelatorSet`; raises
    :class:`ValidationError` listing every violation otherwise."""
    lam = Fraction(lam)
    if not (0 < lam < 1):
        raise WordError(f"lambda must be in (0,1), got {lam}")
    violations = relator_violations(relators, alphabet)
    if violations:
        raise ValidationError(violations)
    closure: set[Word] = set()
    for r in relators:
        closure |= closure_star(r)
    return RelatorSet(
        alphabet=alphabet,
        relators=tuple(relators),
        lam=lam,
        proper_power_flags=tuple(is_proper_power(r) for r in relators),
        closure_size=len(closure),
        families=tuple(families),
    )
