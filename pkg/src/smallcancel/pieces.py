"""Piece enumeration between relators and exact C'(lambda) verification.

A piece of u and v is a common prefix of some u' in {u}_* and v' in {v}_*
with u' != v' as words.  All comparisons against lambda are exact rational
arithmetic: |p| < lambda * min(|u|,|v|) is tested as
|p| * den < num * min(|u|,|v|).

Two independent computations of the maximum piece length live here: the
production path works on doubled words (prefix tables, with a suffix
automaton prefilter for long relators), while ``naive_max_piece`` is the
brute-force closure-pair oracle used to cross-check it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .words import RelatorSet, Word, closure_list, cyclic_shift, inverse_word

# Pairs with a relator longer than this go through the automaton prefilter
# before any quadratic table is built.
SAM_THRESHOLD = 64


@dataclass(frozen=True)
class PieceWitness:
    u: int
    v: int
    u_shift: int
    v_shift: int
    piece: Word
    length: int


@dataclass
class CprimeReport:
    satisfied: bool
    lam: Fraction
    max_piece_ratio: Fraction
    violations: tuple[PieceWitness, ...]
    per_pair_max: dict[tuple[int, int], int]
    proper_powers: tuple[int, ...]

    def max_piece_len(self) -> int:
        return max(self.per_pair_max.values(), default=0)


def _lcp(a: Word, b: Word) -> int:
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return i
    return n


def naive_max_piece(u: Word, v: Word) -> tuple[int, Optional[PieceWitness]]:
    """Brute-force oracle: longest common prefix over every pair of distinct
    closure elements."""
    cu, cv = closure_list(u), closure_list(v)
    best, best_w = 0, None
    for i, a in enumerate(cu):
        for j, b in enumerate(cv):
            if a == b:
                continue
            k = _lcp(a, b)
            if k > best:
                best, best_w = k, PieceWitness(-1, -1, i, j, a[:k], k)
    return best, best_w


def _base_pairs(u: Word, v: Word):
    """The four (base_u, base_v) words whose plain shifts cover all closure
    pairs of u and v."""
    iu, iv = inverse_word(u), inverse_word(v)
    yield u, v
    yield u, iv
    yield iu, v
    yield iu, iv


def _table_max_piece(u: Word, v: Word) -> tuple[int, Optional[PieceWitness]]:
    """Prefix-length tables over doubled words for all four base pairs, with
    exact exclusion of shift pairs that coincide as words."""
    n, m = len(u), len(v)
    cap = min(n, m)
    cu, cv = closure_list(u), closure_list(v)
    cu_ix = {w: i for i, w in enumerate(cu)}
    cv_ix = {w: i for i, w in enumerate(cv)}
    best, best_w = 0, None
    for bu, bv in _base_pairs(u, v):
        du = bu + bu
        dv = bv + bv
        prev = [0] * (2 * m + 1)
        for s in range(2 * n - 1, -1, -1):
            cur = [0] * (2 * m + 1)
            cs = du[s]
            for t in range(2 * m - 1, -1, -1):
                if cs == dv[t]:
                    cur[t] = prev[t + 1] + 1
            if s < n:
                for t in range(m):
                    L = cur[t]
                    if L > cap:
                        L = cap
                    if L > best:
                        wu = cyclic_shift(bu, s)
                        wv = cyclic_shift(bv, t)
                        if wu == wv:
                            continue
                        best = L
                        best_w = PieceWitness(-1, -1, cu_ix[wu], cv_ix[wv], wu[:L], L)
            prev = cur
    return best, best_w


def _suffix_automaton(s: bytes):
    link = [-1]
    length = [0]
    trans: list[dict[int, int]] = [{}]
    last = 0
    for ch in s:
        cur = len(length)
        length.append(length[last] + 1)
        link.append(-2)
        trans.append({})
        p = last
        while p != -1 and ch not in trans[p]:
            trans[p][ch] = cur
            p = link[p]
        if p == -1:
            link[cur] = 0
        else:
            q = trans[p][ch]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                clone = len(length)
                length.append(length[p] + 1)
                link.append(link[q])
                trans.append(dict(trans[q]))
                while p != -1 and trans[p].get(ch) == q:
                    trans[p][ch] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
        last = cur
    return link, length, trans


def _sam_best_common(du: bytes, dv: bytes, cap: int) -> tuple[int, int]:
    """Longest common substring of du and dv clamped to cap; returns
    (length, end index in dv), (0, -1) if none."""
    link, length, trans = _suffix_automaton(du)
    state = 0
    l = 0
    best, best_end = 0, -1
    for pos, ch in enumerate(dv):
        while state and ch not in trans[state]:
            state = link[state]
            l = length[state]
        if ch in trans[state]:
            state = trans[state][ch]
            l += 1
        else:
            state, l = 0, 0
        if l > cap:
            l = cap
        if l > best:
            best, best_end = l, pos
    return best, best_end


def max_piece(u: Word, v: Word) -> tuple[int, Optional[PieceWitness]]:
    """Maximum piece length of u and v and one maximizing witness.

    Witness shift indices point into closure_list(u) / closure_list(v); the
    relator indices are -1 here and filled in by verify_cprime.
    """
    n, m = len(u), len(v)
    if n == 0 or m == 0:
        return 0, None
    cap = min(n, m)
    if max(n, m) > SAM_THRESHOLD:
        best = 0
        best_hit = None
        for bu, bv in _base_pairs(u, v):
            du = bytes(bu + bu)
            dv = bytes(bv + bv)
            L, end = _sam_best_common(du, dv, cap)
            if L > best:
                best, best_hit = L, (bu, bv, du, dv, end)
        if best == 0:
            return 0, None
        if best == n == m:
            # a full-length match may come from an equal shift pair only;
            # settle it with the exact tables
            return _table_max_piece(u, v)
        bu, bv, du, dv, end = best_hit
        piece_b = dv[end - best + 1 : end + 1]
        t = (end - best + 1) % m
        s = du.find(piece_b) % n
        wu = cyclic_shift(bu, s)
        wv = cyclic_shift(bv, t)
        cu_ix = {w: i for i, w in enumerate(closure_list(u))}
        cv_ix = {w: i for i, w in enumerate(closure_list(v))}
        return best, PieceWitness(-1, -1, cu_ix[wu], cv_ix[wv], wu[:best], best)
    return _table_max_piece(u, v)


def verify_cprime(rs: RelatorSet) -> CprimeReport:
    """Exact C'(lambda) verdict over every unordered relator pair, including
    self-pairs (distinct shifts of a single relator)."""
    lam = rs.lam
    per_pair: dict[tuple[int, int], int] = {}
    violations: list[PieceWitness] = []
    ratio = Fraction(0)
    for i in range(len(rs.relators)):
        for j in range(i, len(rs.relators)):
            u, v = rs.relators[i], rs.relators[j]
            length, wit = max_piece(u, v)
            per_pair[(i, j)] = length
            if wit is None:
                continue
            wit = PieceWitness(i, j, wit.u_shift, wit.v_shift, wit.piece, wit.length)
            lo = min(len(u), len(v))
            r = Fraction(length, lo)
            if r > ratio:
                ratio = r
            if length * lam.denominator >= lam.numerator * lo:
                violations.append(wit)
    return CprimeReport(
        satisfied=not violations,
        lam=lam,
        max_piece_ratio=ratio,
        violations=tuple(violations),
        per_pair_max=per_pair,
        proper_powers=tuple(i for i, f in enumerate(rs.proper_power_flags) if f),
    )


def piece_spectrum(rs: RelatorSet) -> dict[tuple[int, int], Fraction]:
    """Longest-piece ratio per relator pair, as exact rationals."""
    out: dict[tuple[int, int], Fraction] = {}
    for i in range(len(rs.relators)):
        for j in range(i, len(rs.relators)):
            u, v = rs.relators[i], rs.relators[j]
            length, _ = max_piece(u, v)
            out[(i, j)] = Fraction(length, min(len(u), len(v)))
    return out
