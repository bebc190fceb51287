"""Word problem for C'(1/6) presentations via Dehn's algorithm.

Rewriting rules come from the closure R_*: for a closure element r and any
cut r = sigma rho with |sigma| > |r|/2, the rule replaces sigma by rho^-1
and strictly shortens the word.  Length-preserving half cuts
(|sigma| = |r|/2, even relators) are indexed separately; they never appear
in a reduction trace but drive the geodesic normalization used by the ball
builder.

Hot paths work on bytes (one letter per byte, the words.py letter codes).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .pieces import verify_cprime
from .words import RelatorSet, Word, closure_list, free_reduce, inverse_word

MAX_LETTERS = 256


class DehnPreconditionError(ValueError):
    """The relator set is not verified C'(1/6)."""


def word_to_bytes(w: Word) -> bytes:
    return bytes(w)


def bytes_to_word(b: bytes) -> Word:
    return tuple(b)


def inverse_bytes(b: bytes) -> bytes:
    return bytes(c ^ 1 for c in reversed(b))


def free_reduce_bytes(b) -> bytes:
    out = bytearray()
    for c in b:
        if out and out[-1] == c ^ 1:
            out.pop()
        else:
            out.append(c)
    return bytes(out)


@dataclass(frozen=True)
class DehnStep:
    kind: str  # "free-cancel" | "relator-replace"
    position: int
    closure_word: Optional[Word]
    segment_length: int
    replacement: Word


@dataclass(frozen=True)
class DehnTrace:
    input: Word
    steps: tuple[DehnStep, ...]
    output: Word

    def replay(self) -> Word:
        """Re-apply every step to the input, checking each one mechanically."""
        w = list(self.input)
        for st in self.steps:
            seg = w[st.position : st.position + st.segment_length]
            if st.kind == "free-cancel":
                if st.segment_length != 2 or seg[0] != seg[1] ^ 1:
                    raise AssertionError(f"bad free-cancel step {st}")
            elif st.kind == "relator-replace":
                r = st.closure_word
                if r is None or tuple(seg) != r[: st.segment_length]:
                    raise AssertionError(f"segment does not match closure prefix: {st}")
                if 2 * st.segment_length <= len(r):
                    raise AssertionError(f"segment not more than half the relator: {st}")
                if st.replacement != inverse_word(r[st.segment_length :]):
                    raise AssertionError(f"replacement is not the complement: {st}")
            else:
                raise AssertionError(f"unknown step kind {st.kind}")
            w[st.position : st.position + st.segment_length] = list(st.replacement)
        out = tuple(w)
        if out != self.output:
            raise AssertionError("trace replay does not reproduce the output")
        return out


class DehnIndex:
    """Prefix-indexed rewriting rules for one relator set.

    ``red`` holds the strictly shortening rules keyed by the first g letters
    of sigma, where g = |r|//2 + 1 is the shortest over-half prefix for that
    relator length; ``flip`` holds the length-preserving half cuts of even
    relators, keyed by the g = |r|/2 prefix.
    """

    def __init__(self, rs: RelatorSet):
        if rs.alphabet.num_letters > MAX_LETTERS:
            raise ValueError("alphabet too large for the byte encoding")
        self.rs = rs
        self.report = verify_cprime(rs)
        for (i, j), length in self.report.per_pair_max.items():
            u, v = rs.relators[i], rs.relators[j]
            if 6 * length >= min(len(u), len(v)):
                raise DehnPreconditionError(
                    f"relator pair ({i},{j}) has a piece of length {length}, "
                    f"not < min(|u|,|v|)/6"
                )
        closure: dict[bytes, None] = {}
        for r in rs.relators:
            for w in closure_list(r):
                closure.setdefault(word_to_bytes(w), None)
        self.closure_bytes: list[bytes] = list(closure)
        self.closure_words: list[Word] = [bytes_to_word(b) for b in self.closure_bytes]

        self.red: dict[int, dict[bytes, list[tuple[bytes, bytes, int]]]] = {}
        self.flip: dict[int, dict[bytes, list[tuple[bytes, bytes]]]] = {}
        for ci, rb in enumerate(self.closure_bytes):
            L = len(rb)
            g_red = L // 2 + 1
            by_gram = self.red.setdefault(g_red, {})
            for cut in range(g_red, L + 1):
                sigma = rb[:cut]
                repl = inverse_bytes(rb[cut:])
                by_gram.setdefault(sigma[:g_red], []).append((sigma, repl, ci))
            if L % 2 == 0:
                g = L // 2
                sigma = rb[:g]
                repl = inverse_bytes(rb[g:])
                if sigma != repl:
                    self.flip.setdefault(g, {}).setdefault(sigma, []).append(
                        (sigma, repl)
                    )
        for by_gram in self.red.values():
            for rules in by_gram.values():
                rules.sort(key=lambda r: (-len(r[0]), len(r[1]), r[1]))
        # screening grams: at a position, any applicable rule (flip or
        # reduction) implies a hit of one of these fixed-length prefixes
        screen: dict[int, set[bytes]] = {}
        for g, by_gram in self.red.items():
            for rules in by_gram.values():
                for sigma, _, _ in rules:
                    screen.setdefault(g, set()).add(sigma[:g])
        for g, by_gram in self.flip.items():
            screen.setdefault(g, set()).update(by_gram.keys())
        self.screen: list[tuple[int, frozenset[bytes]]] = sorted(
            (g, frozenset(s)) for g, s in screen.items()
        )

    @property
    def has_rules(self) -> bool:
        return bool(self.red) or bool(self.flip)

    def find_reduction(self, wb: bytes):
        """Leftmost-longest shortening rule match; ties broken by ShortLex of
        the replacement.  Returns (pos, sigma, repl, closure index) or None."""
        n = len(wb)
        for pos in range(n):
            best = None
            best_key = None
            for g, by_gram in self.red.items():
                if pos + g > n:
                    continue
                rules = by_gram.get(wb[pos : pos + g])
                if not rules:
                    continue
                # the first match in the list is the longest sigma for this
                # gram, with the ShortLex-least replacement among equals
                for sigma, repl, ci in rules:
                    if wb.startswith(sigma, pos):
                        key = (-len(sigma), len(repl), repl)
                        if best_key is None or key < best_key:
                            best_key = key
                            best = (pos, sigma, repl, ci)
                        break
            if best is not None:
                return best
        return None

    def reduce_bytes(self, wb: bytes) -> bytes:
        """Freely reduce, then apply shortening rules to a fixpoint."""
        wb = free_reduce_bytes(wb)
        while True:
            hit = self.find_reduction(wb)
            if hit is None:
                return wb
            pos, sigma, repl, _ = hit
            wb = free_reduce_bytes(wb[:pos] + repl + wb[pos + len(sigma) :])


@lru_cache(maxsize=128)
def dehn_index(rs: RelatorSet) -> DehnIndex:
    return DehnIndex(rs)


def _free_reduce_steps(letters: list[int], steps: list[DehnStep]) -> list[int]:
    out: list[int] = []
    for c in letters:
        if out and out[-1] == c ^ 1:
            steps.append(DehnStep("free-cancel", len(out) - 1, None, 2, ()))
            out.pop()
        else:
            out.append(c)
    return out


def dehn_reduce(w: Word, rs: RelatorSet) -> DehnTrace:
    """Greedy leftmost-longest Dehn reduction with a full step trace.

    The output is freely reduced and contains no subword that is more than
    half of any element of R_*.
    """
    index = dehn_index(rs)
    steps: list[DehnStep] = []
    cur = _free_reduce_steps(list(w), steps)
    while True:
        hit = index.find_reduction(bytes(cur))
        if hit is None:
            break
        pos, sigma, repl, ci = hit
        steps.append(
            DehnStep(
                "relator-replace",
                pos,
                index.closure_words[ci],
                len(sigma),
                bytes_to_word(repl),
            )
        )
        cur[pos : pos + len(sigma)] = list(repl)
        cur = _free_reduce_steps(cur, steps)
    trace = DehnTrace(tuple(w), tuple(steps), tuple(cur))
    return trace


def is_identity(w: Word, rs: RelatorSet) -> bool:
    """True iff w represents the identity, decided by Dehn's algorithm."""
    index = dehn_index(rs)
    return len(index.reduce_bytes(word_to_bytes(free_reduce(w)))) == 0


def relator_completeness_radius(rs: RelatorSet, N: int) -> bool:
    """True iff every declared-family relator of length < 4N is present in
    the truncation, so equality tests inside a radius-N ball are sound."""
    for fam in rs.families:
        if fam.min_excluded_length() < 4 * N:
            return False
    return True
