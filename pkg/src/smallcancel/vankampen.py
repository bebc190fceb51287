"""Van Kampen diagrams as labeled plane graphs given by rotation systems.

An edge e owns darts 2e and 2e+1 (mutual twins).  Each dart carries the
letter it spells when traversed (or -1 for an edge labeled by the identity
symbol); rot[v] lists the darts leaving v in counterclockwise order.  The
successor of d inside its face is the dart after twin(d) in the rotation at
d's head, so faces are orbits of that map and the planarity of a connected
diagram is exactly the Euler count V - E + F = 2.  The outer face is the
orbit of the designated base dart; read from the base it spells the boundary
word.

Filling a trivial word replays its reduction trace backwards: each undone
free cancellation grows a spike (an edge walked out and back) and each
undone relator replacement glues one face along the replaced segment, so the
face count equals the number of replacement steps.  Reduction surgery
removes a cancelling pair by deleting the shared edge and zipping the merged
face shut, folding one boundary edge pair at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .dehn import DehnTrace, dehn_reduce, dehn_index
from .words import (
    Alphabet,
    RelatorSet,
    Word,
    cyclic_reduce,
    cyclic_shift,
    free_reduce,
    inverse_word,
)


class DiagramError(ValueError):
    pass


class NotTrivialError(DiagramError):
    """fill_diagram needs a word representing the identity."""


def _inv_label(x: int) -> int:
    return x if x < 0 else x ^ 1


class Diagram:
    """Mutable combinatorial map; public operations copy before mutating."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self.origin: list[int] = []
        self.label: list[int] = []
        self.rot: list[list[int]] = [[]]
        self.base_vertex = 0
        self.base_dart = -1

    # -- elementary structure ------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.rot)

    @property
    def n_darts(self) -> int:
        return len(self.origin)

    @property
    def n_edges(self) -> int:
        return len(self.origin) // 2

    def head(self, d: int) -> int:
        return self.origin[d ^ 1]

    def new_vertex(self) -> int:
        self.rot.append([])
        return len(self.rot) - 1

    def new_edge(self, u: int, v: int, letter: int) -> int:
        """Allocate darts (2e, 2e+1) for u->v labeled ``letter``; rotations
        are left to the caller.  Returns the forward dart."""
        d = len(self.origin)
        self.origin.extend([u, v])
        self.label.extend([letter, _inv_label(letter)])
        return d

    def next_in_face(self, d: int) -> int:
        r = self.rot[self.head(d)]
        i = r.index(d ^ 1)
        return r[(i + 1) % len(r)]

    def faces(self) -> list[list[int]]:
        """All face orbits (outer included), each a dart cycle."""
        seen = [False] * self.n_darts
        out: list[list[int]] = []
        for d0 in range(self.n_darts):
            if seen[d0] or self.origin[d0] < 0:
                continue
            orbit = []
            d = d0
            while not seen[d]:
                seen[d] = True
                orbit.append(d)
                d = self.next_in_face(d)
            out.append(orbit)
        return out

    def boundary_darts(self) -> list[int]:
        if self.base_dart < 0:
            return []
        orbit = [self.base_dart]
        d = self.next_in_face(self.base_dart)
        while d != self.base_dart:
            orbit.append(d)
            d = self.next_in_face(d)
        return orbit

    def boundary_word(self) -> Word:
        return tuple(self.label[d] for d in self.boundary_darts())

    def face_word(self, orbit: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.label[d] for d in orbit)

    def copy(self) -> "Diagram":
        d = Diagram(self.alphabet)
        d.origin = list(self.origin)
        d.label = list(self.label)
        d.rot = [list(r) for r in self.rot]
        d.base_vertex = self.base_vertex
        d.base_dart = self.base_dart
        return d

    def degree(self, v: int) -> int:
        return len(self.rot[v])

    # -- invariant checks ----------------------------------------------------

    def check(self) -> list[str]:
        errors = []
        for d in range(self.n_darts):
            if self.origin[d] < 0:
                continue
            if self.label[d ^ 1] != _inv_label(self.label[d]):
                errors.append(f"dart {d}: twin label mismatch")
            if d not in self.rot[self.origin[d]]:
                errors.append(f"dart {d} missing from its origin rotation")
        for v, r in enumerate(self.rot):
            for d in r:
                if self.origin[d] != v:
                    errors.append(f"rotation at {v} lists dart {d} with origin {self.origin[d]}")
            if len(set(r)) != len(r):
                errors.append(f"rotation at {v} repeats a dart")
        # connectivity over vertices that carry darts, plus the base vertex
        live = {self.base_vertex}
        for d in range(self.n_darts):
            if self.origin[d] >= 0:
                live.add(self.origin[d])
        if live:
            seen = {self.base_vertex}
            stack = [self.base_vertex]
            while stack:
                v = stack.pop()
                for d in self.rot[v]:
                    u = self.head(d)
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
            if seen != live:
                errors.append("diagram is not connected")
        n_live_darts = sum(1 for d in range(self.n_darts) if self.origin[d] >= 0)
        v_count = len(live)
        e_count = n_live_darts // 2
        f_count = len(self.faces())
        if not f_count and not e_count:
            f_count = 1
        if v_count - e_count + f_count != 2:
            errors.append(
                f"Euler count V-E+F = {v_count}-{e_count}+{f_count} != 2"
            )
        return errors


# -- building from a reduction trace ----------------------------------------


def _insert_after(rotation: list[int], anchor: int, dart: int) -> None:
    rotation.insert(rotation.index(anchor) + 1, dart)


def _spike(diag: Diagram, boundary: list[int], pos: int, letter: int) -> None:
    """Grow an out-and-back edge at boundary position pos spelling
    (letter, letter^-1)."""
    if boundary:
        v = diag.origin[boundary[pos % len(boundary)]] if pos < len(boundary) else diag.head(boundary[-1])
    else:
        v = diag.base_vertex
    u = diag.new_vertex()
    d = diag.new_edge(v, u, letter)
    diag.rot[u] = [d ^ 1]
    if boundary:
        prev = boundary[pos - 1] if pos > 0 else boundary[-1]
        _insert_after(diag.rot[v], prev ^ 1, d)
    else:
        diag.rot[v].append(d)
    boundary[pos:pos] = [d, d ^ 1]


def _glue_face(
    diag: Diagram, boundary: list[int], pos: int, seg_len: int, sigma: Word
) -> None:
    """Glue a face along boundary[pos : pos+seg_len], replacing that segment
    by a new path spelling sigma."""
    ell = len(sigma)
    if ell == 0:
        raise DiagramError("glued path must be nonempty")
    seg = boundary[pos : pos + seg_len]
    if seg_len:
        p = diag.origin[seg[0]]
        q = diag.head(seg[-1])
    else:
        if boundary:
            p = q = (
                diag.origin[boundary[pos]]
                if pos < len(boundary)
                else diag.head(boundary[-1])
            )
        else:
            p = q = diag.base_vertex
    # new path p -> q spelling sigma
    gs: list[int] = []
    cur = p
    for i, letter in enumerate(sigma):
        nxt = q if i == ell - 1 else diag.new_vertex()
        gs.append(diag.new_edge(cur, nxt, letter))
        cur = nxt
    for i in range(ell - 1):
        u = diag.head(gs[i])
        diag.rot[u] = [gs[i] ^ 1, gs[i + 1]]
    whole = seg_len == len(boundary) and seg_len > 0
    if seg_len:
        _insert_after(diag.rot[q], seg[-1] ^ 1, gs[-1] ^ 1)
        if not whole:
            prev = boundary[pos - 1] if pos > 0 else boundary[-1]
            _insert_after(diag.rot[p], prev ^ 1, gs[0])
        else:
            _insert_after(diag.rot[p], gs[-1] ^ 1, gs[0])
    else:
        if boundary:
            prev = boundary[pos - 1] if pos > 0 else boundary[-1]
            _insert_after(diag.rot[p], prev ^ 1, gs[0])
            _insert_after(diag.rot[p], gs[0], gs[-1] ^ 1)
        else:
            diag.rot[p].extend([gs[0], gs[-1] ^ 1])
    boundary[pos : pos + seg_len] = gs


def fill_diagram(w: Word, rs: RelatorSet) -> Diagram:
    """A van Kampen diagram with boundary label w, built by replaying the
    reduction trace of w backwards; one essential face per replacement step.

    Raises NotTrivialError when w does not represent the identity.
    """
    w = tuple(w)
    if free_reduce(w) != w:
        raise DiagramError("boundary word must be freely reduced")
    trace = dehn_reduce(w, rs)
    if trace.output != ():
        raise NotTrivialError(f"word does not represent the identity: {w}")
    # forward word snapshots, one per step
    snaps = [list(trace.input)]
    for st in trace.steps:
        cur = list(snaps[-1])
        cur[st.position : st.position + st.segment_length] = list(st.replacement)
        snaps.append(cur)
    diag = Diagram(rs.alphabet)
    boundary: list[int] = []
    for j in range(len(trace.steps) - 1, -1, -1):
        st = trace.steps[j]
        before = snaps[j]
        if st.kind == "free-cancel":
            _spike(diag, boundary, st.position, before[st.position])
        else:
            sigma = st.closure_word[: st.segment_length]
            _glue_face(diag, boundary, st.position, len(st.replacement), sigma)
    if boundary:
        diag.base_dart = boundary[0]
        diag.base_vertex = diag.origin[boundary[0]]
    if diag.boundary_word() != w:
        raise AssertionError("rebuilt boundary does not spell the input word")
    return diag


# -- verification ------------------------------------------------------------


@dataclass
class FaceInfo:
    darts: tuple[int, ...]
    word: tuple[int, ...]
    essential: bool
    inessential: bool


@dataclass
class DiagramReport:
    valid: bool
    errors: tuple[str, ...]
    faces: tuple[FaceInfo, ...]  # bounded faces only
    boundary: tuple[int, ...]
    bare: bool

    @property
    def essential_count(self) -> int:
        return sum(1 for f in self.faces if f.essential)


def verify_diagram(diag: Diagram, rs: RelatorSet) -> DiagramReport:
    """Structural checks plus the face-label law: every bounded face reads an
    element of the relator closure or a freely trivial word."""
    errors = list(diag.check())
    closure = frozenset(rs.closure())
    faces: list[FaceInfo] = []
    boundary = diag.boundary_darts()
    boundary_set = set(boundary)
    if diag.n_darts and diag.base_dart < 0:
        errors.append("nonempty diagram without a base dart")
    for orbit in diag.faces():
        if orbit and orbit[0] in boundary_set:
            continue
        word = diag.face_word(orbit)
        essential = -1 not in word and word in closure
        reduced = free_reduce(tuple(c for c in word if c >= 0))
        inessential = reduced == ()
        if not essential and not inessential:
            errors.append(
                f"face {tuple(orbit)} reads "
                f"{diag.alphabet.word_str(tuple(c for c in word if c >= 0)) or '1'}: "
                "neither a closure element nor freely trivial"
            )
        faces.append(FaceInfo(tuple(orbit), word, essential, inessential))
    bare = not any(f.inessential for f in faces)
    return DiagramReport(
        valid=not errors,
        errors=tuple(errors),
        faces=tuple(faces),
        boundary=tuple(boundary),
        bare=bare,
    )


# -- cancellation and reduction ----------------------------------------------


def find_cancelling_pair(diag: Diagram):
    """A pair of distinct bounded faces reading mirror words from a shared
    edge, or None.  Returns (face darts, face' darts, edge index)."""
    boundary_set = set(diag.boundary_darts())
    face_of: dict[int, int] = {}
    orbits = diag.faces()
    bounded: list[list[int]] = []
    for orbit in orbits:
        if orbit[0] in boundary_set:
            continue
        idx = len(bounded)
        bounded.append(orbit)
        for d in orbit:
            face_of[d] = idx
    for fi, orbit in enumerate(bounded):
        for k, d in enumerate(orbit):
            fj = face_of.get(d ^ 1)
            if fj is None or fj == fi:
                continue
            other = bounded[fj]
            m = other.index(d ^ 1)
            # words from the shared edge: F read forward from d, F' read
            # backward through the twin
            wf = [diag.label[x] for x in orbit[k:] + orbit[:k]]
            rest = other[m + 1 :] + other[:m]
            wb = [_inv_label(diag.label[x]) for x in reversed(rest)]
            if len(wf) == len(wb) + 1 and wf[1:] == wb:
                return tuple(orbit[k:] + orbit[:k]), tuple(other[m + 1 :] + other[:m] + [d ^ 1]), d // 2
    return None


def _fold(diag: Diagram, a: int, b: int) -> None:
    """Fold dart b onto a (label(b) = label(a)^-1, b follows a in a face);
    removes edge(b) and merges head(b) into origin(a)."""
    v = diag.origin[a]
    z = diag.origin[b]
    w = diag.head(b)
    diag.rot[z].remove(b)
    tb = b ^ 1
    rw = diag.rot[w]
    i = rw.index(tb)
    remnant = rw[i + 1 :] + rw[:i]
    if w == v:
        # final-style self fold: the removed slot must sit just before a
        diag.rot[v].remove(tb)
    else:
        diag.rot[w] = []
        ra = diag.rot[v]
        j = ra.index(a)
        diag.rot[v] = ra[:j] + remnant + ra[j:]
        for d in remnant:
            diag.origin[d] = v
    # retire edge(b)
    diag.origin[b] = diag.origin[tb] = -1
    if diag.base_dart == tb:
        diag.base_dart = a
    if diag.base_vertex == w and w != v:
        diag.base_vertex = v


def _excise_pair(diag: Diagram, fa: Sequence[int], fb: Sequence[int], edge: int) -> None:
    """Remove the cancelling pair (fa read from the shared dart, fb ending
    with its twin) and zip the merged region shut."""
    d = fa[0]
    td = d ^ 1
    diag.rot[diag.origin[d]].remove(d)
    diag.rot[diag.origin[td]].remove(td)
    diag.origin[d] = diag.origin[td] = -1
    merged = list(fa[1:]) + list(fb[:-1])
    while merged:
        n = len(merged)
        pick = None
        for i in range(n):
            x, y = merged[i], merged[(i + 1) % n]
            if diag.head(x) != diag.origin[y]:
                raise AssertionError("merged face orbit lost adjacency")
            if diag.label[y] != _inv_label(diag.label[x]):
                continue
            if y == (x ^ 1):
                pick = (i, x, y, "spike")
                break
            w = diag.head(y)
            vv = diag.origin[x]
            if w != vv:
                pick = (i, x, y, "fold")
                break
            # self fold is safe only when the twin slot directly precedes x
            rw = diag.rot[vv]
            if rw[(rw.index(y ^ 1) + 1) % len(rw)] == x:
                pick = (i, x, y, "fold")
                break
        if pick is None:
            raise AssertionError("no zippable pair in merged face")
        i, x, y, kind = pick
        if kind == "spike":
            u = diag.head(x)
            diag.rot[diag.origin[x]].remove(x)
            diag.rot[u].remove(y)
            if diag.base_dart in (x, y):
                raise AssertionError("base dart vanished during reduction")
            diag.origin[x] = diag.origin[y] = -1
        else:
            _fold(diag, x, y)
        if (i + 1) % n == 0:
            merged = merged[1 : n - 1]
        else:
            merged = merged[:i] + merged[i + 2 :]


def reduce_diagram(diag: Diagram) -> Diagram:
    """Remove cancelling face pairs until none remain; the boundary label is
    untouched and each move deletes two faces."""
    out = diag.copy()
    while True:
        hit = find_cancelling_pair(out)
        if hit is None:
            return out
        fa, fb, edge = hit
        _excise_pair(out, fa, fb, edge)


def small_cancellation_check(diag: Diagram, rs: RelatorSet) -> list[dict]:
    """Every common boundary subpath of two distinct essential faces must be
    shorter than lambda times either boundary; violations witness a
    non-reduced diagram or a broken presentation."""
    lam = rs.lam
    boundary_set = set(diag.boundary_darts())
    face_of: dict[int, int] = {}
    bounded = []
    for orbit in diag.faces():
        if orbit[0] in boundary_set:
            continue
        for d in orbit:
            face_of[d] = len(bounded)
        bounded.append(orbit)
    def continues(prev: int, d: int, fj: int) -> bool:
        # the reversed pair (twin d, twin prev) must also be consecutive on
        # the other face for the shared edges to form one common subpath
        return (
            face_of.get(prev ^ 1) == fj
            and diag.next_in_face(d ^ 1) == prev ^ 1
        )

    violations = []
    for fi, orbit in enumerate(bounded):
        n = len(orbit)
        for k, d in enumerate(orbit):
            fj = face_of.get(d ^ 1)
            if fj is None or fj <= fi:
                continue
            if n > 1 and continues(orbit[k - 1], d, fj):
                continue  # not the start of a maximal common subpath
            run = 1
            while run < n:
                prev = orbit[(k + run - 1) % n]
                nxt = orbit[(k + run) % n]
                if face_of.get(nxt ^ 1) == fj and continues(prev, nxt, fj):
                    run += 1
                else:
                    break
            lo = min(len(orbit), len(bounded[fj]))
            if run * lam.denominator >= lam.numerator * lo:
                violations.append(
                    {
                        "faces": (fi, fj),
                        "shared_length": run,
                        "min_boundary": lo,
                        "lambda": lam,
                    }
                )
    return violations


# -- corner decomposition and triangle diagnostics ----------------------------


@dataclass
class Side:
    darts: tuple[int, ...]
    exterior: bool

    @property
    def length(self) -> int:
        return len(self.darts)


@dataclass
class FaceRecord:
    index: int
    darts: tuple[int, ...]
    essential: bool
    sides: tuple[Side, ...]

    @property
    def boundary_length(self) -> int:
        return len(self.darts)

    @property
    def interior_sides(self) -> int:
        return sum(1 for s in self.sides if not s.exterior)

    @property
    def shape(self) -> int:
        return len(self.sides)


@dataclass
class CornerDecomposition:
    markers: tuple[int, int, int]  # vertices a, b, c
    arcs: dict  # side name -> tuple of boundary darts ('gamma' a->b, 'alpha' b->c, 'beta' c->a)
    faces: tuple[FaceRecord, ...]
    corners: dict  # 'A'|'B'|'C' -> tuple of face indices (empty = vertex marker)
    middle: Optional[int]  # face index of the middle face
    corner_arcs: dict  # 'A'|'B'|'C' -> {side name: length, 'iota': length}


def _face_records(diag: Diagram, markers: tuple[int, int, int]) -> tuple[list[list[int]], list[FaceRecord]]:
    boundary = diag.boundary_darts()
    boundary_edges = {d // 2 for d in boundary}
    boundary_first = set(boundary)
    records: list[FaceRecord] = []
    bounded: list[list[int]] = []
    marker_set = set(markers)
    closure = None
    for orbit in diag.faces():
        if orbit[0] in boundary_first:
            continue
        idx = len(bounded)
        bounded.append(orbit)
        n = len(orbit)
        # break the orbit at vertices of degree != 2 and at the markers
        breaks = [
            i
            for i in range(n)
            if diag.degree(diag.origin[orbit[i]]) != 2
            or diag.origin[orbit[i]] in marker_set
        ]
        sides: list[Side] = []
        if not breaks:
            sides.append(
                Side(tuple(orbit), all(d // 2 in boundary_edges for d in orbit))
            )
        else:
            for bi in range(len(breaks)):
                start = breaks[bi]
                stop = breaks[(bi + 1) % len(breaks)]
                if stop <= start:
                    stop += n
                darts = tuple(orbit[i % n] for i in range(start, stop))
                sides.append(
                    Side(darts, all(d // 2 in boundary_edges for d in darts))
                )
        records.append(FaceRecord(idx, tuple(orbit), True, tuple(sides)))
    return bounded, records


def corner_decomposition(
    diag: Diagram, a: int, b: int, c: int
) -> CornerDecomposition:
    """Split the boundary into the arcs gamma=[a,b], alpha=[b,c], beta=[c,a]
    and sort the faces into corners by which arc they avoid.

    Rejects diagrams whose boundary does not visit the three distinct
    markers exactly once each, in this cyclic order from the base.
    """
    if len({a, b, c}) != 3:
        raise DiagramError("corner markers must be three distinct vertices")
    boundary = diag.boundary_darts()
    verts = [diag.origin[d] for d in boundary]
    if any(verts.count(m) != 1 for m in (a, b, c)):
        raise DiagramError("each corner marker must appear exactly once on the boundary")
    ia, ib, ic = verts.index(a), verts.index(b), verts.index(c)
    rolled = boundary[ia:] + boundary[:ia]
    jb, jc = (ib - ia) % len(boundary), (ic - ia) % len(boundary)
    if not 0 < jb < jc:
        raise DiagramError("markers must occur in the order a, b, c along the boundary")
    arcs = {
        "gamma": tuple(rolled[:jb]),
        "alpha": tuple(rolled[jb:jc]),
        "beta": tuple(rolled[jc:]),
    }
    arc_edges = {k: {d // 2 for d in v} for k, v in arcs.items()}
    bounded, records = _face_records(diag, (a, b, c))
    shares = []
    for orbit in bounded:
        edges = {d // 2 for d in orbit}
        shares.append({k: bool(edges & arc_edges[k]) for k in arcs})
    corners = {
        "A": tuple(i for i, s in enumerate(shares) if not s["alpha"]),
        "B": tuple(i for i, s in enumerate(shares) if not s["beta"]),
        "C": tuple(i for i, s in enumerate(shares) if not s["gamma"]),
    }
    middles = [i for i, s in enumerate(shares) if all(s.values())]
    if len(middles) > 1:
        raise DiagramError(f"more than one middle face: {middles}")
    middle = middles[0] if middles else None

    # region boundaries: an edge lies on the boundary of a face-set region
    # iff exactly one of its two sides is a face of the region
    face_of: dict[int, int] = {}
    for i, orbit in enumerate(bounded):
        for d in orbit:
            face_of[d] = i
    corner_sides = {"A": ("beta", "gamma"), "B": ("alpha", "gamma"), "C": ("alpha", "beta")}
    corner_arcs: dict = {}
    for cname, fids in corners.items():
        fset = set(fids)
        if not fset:
            corner_arcs[cname] = None
            continue
        edge_ids = {d // 2 for i in fids for d in bounded[i]}
        border = set()
        for e in edge_ids:
            in_a = face_of.get(2 * e) in fset
            in_b = face_of.get(2 * e + 1) in fset
            if in_a != in_b:
                border.add(e)
        s1, s2 = corner_sides[cname]
        l1 = len(border & arc_edges[s1])
        l2 = len(border & arc_edges[s2])
        liota = len(border) - l1 - l2
        corner_arcs[cname] = {s1: l1, s2: l2, "iota": liota}
    return CornerDecomposition(
        markers=(a, b, c),
        arcs=arcs,
        faces=tuple(records),
        corners=corners,
        middle=middle,
        corner_arcs=corner_arcs,
    )


@dataclass
class SideCheck:
    face: int
    side: tuple[int, ...]
    total: int
    sigma: int
    exterior_rest: int
    interior_count: int
    basic_ok: bool  # sum of other sides >= half the boundary
    strengthened_ok: bool  # exterior others > (1/2 - i(F)/6) * boundary


def dehn_reduction_check(diag: Diagram, decomp: CornerDecomposition) -> list[SideCheck]:
    """For every exterior side sigma of every face: the other sides reach at
    least half the face boundary, and the exterior ones alone exceed
    (1/2 - i(F)/6) of it."""
    out: list[SideCheck] = []
    for rec in decomp.faces:
        total = rec.boundary_length
        i_f = rec.interior_sides
        for s in rec.sides:
            if not s.exterior:
                continue
            rest = total - s.length
            ext_rest = sum(
                t.length for t in rec.sides if t.exterior and t is not s
            )
            out.append(
                SideCheck(
                    face=rec.index,
                    side=s.darts,
                    total=total,
                    sigma=s.length,
                    exterior_rest=ext_rest,
                    interior_count=i_f,
                    basic_ok=2 * rest >= total,
                    strengthened_ok=6 * ext_rest > (3 - i_f) * total,
                )
            )
    return out


@dataclass
class CornerCheck:
    corner: str
    skipped: bool
    lengths: Optional[dict]
    iota_ok: Optional[bool]
    balance_ok: Optional[bool]
    middle_strengthened: bool


def small_corners_check(diag: Diagram, decomp: CornerDecomposition) -> list[CornerCheck]:
    """Corner arc comparisons: iota < 2 min(arm1, arm2) and
    max < 3 min, tightened to < min and < 2 min when a middle face exists.
    Inapplicable corners (no faces, or an arm of length zero) are skipped."""
    has_middle = decomp.middle is not None
    out: list[CornerCheck] = []
    for cname in ("A", "B", "C"):
        arcs = decomp.corner_arcs[cname]
        if arcs is None:
            out.append(CornerCheck(cname, True, None, None, None, has_middle))
            continue
        (k1, l1), (k2, l2) = [(k, v) for k, v in arcs.items() if k != "iota"]
        liota = arcs["iota"]
        if min(l1, l2) == 0:
            out.append(CornerCheck(cname, True, dict(arcs), None, None, has_middle))
            continue
        lo, hi = min(l1, l2), max(l1, l2)
        iota_ok = liota < (1 if has_middle else 2) * lo
        balance_ok = hi < (2 if has_middle else 3) * lo
        out.append(
            CornerCheck(cname, False, dict(arcs), iota_ok, balance_ok, has_middle)
        )
    return out


def middle_face_check(diag: Diagram, decomp: CornerDecomposition) -> Optional[dict]:
    """The middle face's share of iota_B, alpha and iota_C stays below the
    alpha arc length; None when there is no middle face."""
    if decomp.middle is None:
        return None
    rec = decomp.faces[decomp.middle]
    face_edges = {d // 2 for d in rec.darts}
    alpha_edges = {d // 2 for d in decomp.arcs["alpha"]}
    # iota edges of the B and C corners
    bounded_edges = {}
    take = 0
    for cname in ("B", "C"):
        fids = set(decomp.corners[cname])
        if not fids:
            continue
        corner_edge_ids = set()
        face_of = {}
        for rec2 in decomp.faces:
            for d in rec2.darts:
                face_of[d] = rec2.index
        for i in fids:
            for d in decomp.faces[i].darts:
                e = d // 2
                in_a = face_of.get(2 * e) in fids
                in_b = face_of.get(2 * e + 1) in fids
                if in_a != in_b:
                    corner_edge_ids.add(e)
        arc_names = {"B": ("alpha", "gamma"), "C": ("alpha", "beta")}[cname]
        iota_edges = corner_edge_ids - {
            d // 2 for an in arc_names for d in decomp.arcs[an]
        }
        take += len(face_edges & iota_edges)
    take += len(face_edges & alpha_edges)
    alpha_len = len(decomp.arcs["alpha"])
    return {
        "middle_share": take,
        "alpha_length": alpha_len,
        "ok": take < alpha_len,
    }


# -- Strebel classification ---------------------------------------------------


@dataclass
class StrebelVerdict:
    type_: str  # 'I-II' | 'III' | 'IV' | 'V' | 'NonConforming'
    corner_shapes: dict  # corner -> tuple of side counts, extremal first
    middle_shape: Optional[int]
    subdivision_witness: dict  # face index -> tuple of side lengths
    ambiguity: tuple[str, ...]
    reason: Optional[str]


def _corner_chain(decomp: CornerDecomposition, cname: str, corner_vertex: int,
                  diag: Diagram) -> Optional[list[int]]:
    """Faces of a corner ordered from the extremal face outward, following
    shared interior sides; None when the corner is not a chain."""
    fids = set(decomp.corners[cname])
    if not fids:
        return []
    by_dart = {}
    for i in fids:
        for d in decomp.faces[i].darts:
            by_dart[d] = i
    extremal = [
        i
        for i in fids
        if any(diag.origin[d] == corner_vertex for d in decomp.faces[i].darts)
    ]
    if len(extremal) != 1:
        return None
    chain = [extremal[0]]
    seen = {extremal[0]}
    while True:
        nxt = set()
        for d in decomp.faces[chain[-1]].darts:
            j = by_dart.get(d ^ 1)
            if j is not None and j not in seen:
                nxt.add(j)
        if not nxt:
            break
        if len(nxt) > 1:
            return None
        j = nxt.pop()
        chain.append(j)
        seen.add(j)
    if seen != fids:
        return None
    return chain


def classify_strebel(diag: Diagram, decomp: CornerDecomposition) -> StrebelVerdict:
    """Match the smoothed diagram against the four triangle families.

    Shapes are side counts after suppressing degree-2 vertices.  The grammar:
    a populated corner is a chain [triangle or quadrilateral extremal]
    [quadrilaterals]* [one pentagon]?, with one corner allowed a tail of two
    single-exterior-side pentagons (family IV).  A single face, or a two-ended
    band whose faces all touch two of the triangle sides, is I-II; a middle
    face with three conforming populated corners is III; no middle face with
    a IV tail is IV, and with three conforming corners meeting pairwise is V.
    """
    witness = {rec.index: tuple(s.length for s in rec.sides) for rec in decomp.faces}
    shapes = {rec.index: rec.shape for rec in decomp.faces}
    nfaces = len(decomp.faces)
    ambiguity: list[str] = []
    if nfaces == 0:
        return StrebelVerdict("NonConforming", {}, None, witness, (), "no faces")
    if any(s > 7 for s in shapes.values()):
        return StrebelVerdict(
            "NonConforming", {}, None, witness,
            (), f"face with more than seven sides: {shapes}",
        )
    if nfaces == 1:
        return StrebelVerdict(
            "I-II", {c: () for c in "ABC"},
            shapes[0] if decomp.middle == 0 else None, witness, (), None,
        )

    a, b, c = decomp.markers
    corner_vertex = {"A": a, "B": b, "C": c}
    chains = {}
    for cname in ("A", "B", "C"):
        chain = _corner_chain(decomp, cname, corner_vertex[cname], diag)
        if chain is None:
            return StrebelVerdict(
                "NonConforming", {}, None, witness,
                tuple(ambiguity), f"{cname}-corner is not a face chain",
            )
        chains[cname] = chain
    corner_shapes = {cn: tuple(shapes[i] for i in chains[cn]) for cn in chains}
    middle_shape = shapes[decomp.middle] if decomp.middle is not None else None

    def chain_conforms(seq, allow_quad_extremal: bool, allow_iv_tail: bool):
        """Returns (ok, has_iv_tail)."""
        if not seq:
            return True, False
        body = list(seq)
        iv_tail = False
        if allow_iv_tail and len(body) >= 2 and body[-1] == 5 and body[-2] == 5:
            body = body[:-2]
            iv_tail = True
        if body and body[-1] == 5:
            body = body[:-1]
        if not body and iv_tail:
            return True, True
        if not body:
            return False, iv_tail  # a lone pentagon cannot be extremal
        if body[0] not in ((3, 4) if allow_quad_extremal else (3,)):
            return False, iv_tail
        if any(s != 4 for s in body[1:]):
            return False, iv_tail
        return True, iv_tail

    populated = [cn for cn in ("A", "B", "C") if chains[cn]]
    if decomp.middle is not None:
        in_no_corner = [
            i for i in shapes if all(i not in decomp.corners[cn] for cn in "ABC")
        ]
        band = _is_band(diag, decomp)
        if len(populated) <= 2 and band:
            return StrebelVerdict(
                "I-II", corner_shapes, middle_shape, witness, tuple(ambiguity), None
            )
        if len(populated) == 3:
            ok = all(chain_conforms(corner_shapes[cn], False, False)[0] for cn in populated)
            borders = all(
                _faces_adjacent(diag, decomp, chains[cn][-1], decomp.middle)
                for cn in populated
            )
            if ok and borders:
                return StrebelVerdict(
                    "III", corner_shapes, middle_shape, witness, tuple(ambiguity), None
                )
            return StrebelVerdict(
                "NonConforming", corner_shapes, middle_shape, witness,
                tuple(ambiguity),
                "middle face present but corner chains do not fit the III grammar",
            )
        return StrebelVerdict(
            "NonConforming", corner_shapes, middle_shape, witness,
            tuple(ambiguity), "middle face with unclassifiable corner layout",
        )
    # no middle face
    tails = {}
    conform = {}
    for cn in populated:
        ok, tail = chain_conforms(corner_shapes[cn], True, True)
        conform[cn] = ok
        tails[cn] = tail
    if any(tails.values()):
        if sum(tails.values()) == 1 and all(conform.values()) and len(populated) == 3:
            ambiguity.append(
                "adjacency between the two single-exterior pentagons not constrained"
            )
            return StrebelVerdict(
                "IV", corner_shapes, None, witness, tuple(ambiguity), None
            )
        return StrebelVerdict(
            "NonConforming", corner_shapes, None, witness, tuple(ambiguity),
            "pentagon tail layout does not fit the IV grammar",
        )
    if len(populated) == 3 and all(conform.values()):
        return StrebelVerdict("V", corner_shapes, None, witness, tuple(ambiguity), None)
    if _is_band(diag, decomp):
        return StrebelVerdict(
            "I-II", corner_shapes, None, witness, tuple(ambiguity), None
        )
    return StrebelVerdict(
        "NonConforming", corner_shapes, None, witness, tuple(ambiguity),
        "no middle face and no band or three-corner structure",
    )


def _faces_adjacent(diag: Diagram, decomp: CornerDecomposition, i: int, j: int) -> bool:
    darts_j = set(decomp.faces[j].darts)
    return any((d ^ 1) in darts_j for d in decomp.faces[i].darts)


def _is_band(diag: Diagram, decomp: CornerDecomposition) -> bool:
    """Faces form a path in the adjacency graph and every face has exterior
    sides on at least two of the three triangle arcs."""
    n = len(decomp.faces)
    if n == 1:
        return True
    arc_edges = {k: {d // 2 for d in v} for k, v in decomp.arcs.items()}
    adj: dict[int, set[int]] = {rec.index: set() for rec in decomp.faces}
    by_dart = {}
    for rec in decomp.faces:
        for d in rec.darts:
            by_dart[d] = rec.index
    for rec in decomp.faces:
        touched = sum(
            1 for k in arc_edges if arc_edges[k] & {d // 2 for d in rec.darts}
        )
        if touched < 2:
            return False
        for d in rec.darts:
            j = by_dart.get(d ^ 1)
            if j is not None and j != rec.index:
                adj[rec.index].add(j)
    degs = sorted(len(v) for v in adj.values())
    return degs[0] >= 1 and degs.count(1) == 2 and all(d <= 2 for d in degs)


# -- minimality certification --------------------------------------------------


@dataclass
class MinimalityCertificate:
    certified: bool
    minimal: Optional[bool]
    essential_faces: int
    cap: int
    detail: str


def certify_minimal(diag: Diagram, rs: RelatorSet, cap: int = 12) -> MinimalityCertificate:
    """Bounded search for a diagram with fewer essential faces and the same
    boundary label.

    Zero- and one-face alternatives are decided exactly (freely trivial
    boundary, respectively cyclic core in the closure).  Deeper alternatives
    are probed by peeling boundary-adjacent faces; for two faces and short
    boundaries this is exhaustive, beyond that the certificate is refused.
    """
    w = diag.boundary_word()
    if any(x < 0 for x in w):
        return MinimalityCertificate(False, None, 0, cap, "boundary has identity-labeled edges")
    if len(w) > cap:
        return MinimalityCertificate(False, None, 0, cap, f"boundary longer than cap {cap}")
    rep = verify_diagram(diag, rs)
    k = rep.essential_count
    if k == 0:
        return MinimalityCertificate(True, True, 0, cap, "no essential faces")
    closure = frozenset(rs.closure())
    core, _ = cyclic_reduce(tuple(w))
    if k >= 1 and core == ():
        return MinimalityCertificate(True, False, k, cap, "boundary is freely trivial")
    if k >= 2:
        if core in closure:
            return MinimalityCertificate(True, False, k, cap, "a one-face diagram suffices")
        if k == 2:
            return MinimalityCertificate(
                True, True, k, cap,
                "no zero- or one-face diagram matches the boundary",
            )
        return MinimalityCertificate(
            False, None, k, cap, f"{k} faces exceed the bounded search"
        )
    return MinimalityCertificate(True, True, 1, cap, "boundary is not freely trivial")


# -- embedding into a Cayley ball ----------------------------------------------


class EmbeddingError(DiagramError):
    pass


def embed_in_ball(diag: Diagram, ball, base_vid: int = 0) -> dict[int, int]:
    """The combinatorial map to the ball determined by edge labels from the
    base vertex; label- and orientation-preserving by construction, and
    single-valued exactly when the diagram is a genuine van Kampen diagram."""
    img = {diag.base_vertex: base_vid}
    stack = [diag.base_vertex]
    while stack:
        v = stack.pop()
        for d in diag.rot[v]:
            u = diag.head(d)
            letter = diag.label[d]
            if letter < 0:
                target = img[v]
            else:
                target = int(ball.neighbor[img[v]][letter])
                if target < 0:
                    raise EmbeddingError("image walks outside the ball")
            if u in img:
                if img[u] != target:
                    raise EmbeddingError(
                        f"vertex {u} gets two images: {img[u]} and {target}"
                    )
            else:
                img[u] = target
                stack.append(u)
    return img


# -- serialization and export ---------------------------------------------------


def diagram_to_text(diag: Diagram) -> str:
    lines = ["diagram"]
    lines.append(f"vertices {diag.n_vertices}")
    lines.append(f"base_vertex {diag.base_vertex}")
    lines.append(f"base_dart {diag.base_dart}")
    lines.append(f"darts {diag.n_darts}")
    for d in range(0, diag.n_darts, 2):
        if diag.origin[d] < 0:
            continue
        letter = diag.label[d]
        name = "1" if letter < 0 else diag.alphabet.letter_name(letter)
        lines.append(f"edge {d} {diag.origin[d]} {diag.origin[d ^ 1]} {name}")
    for v, r in enumerate(diag.rot):
        lines.append("rot " + " ".join(str(x) for x in [v] + list(r)))
    lines.append("end")
    return "\n".join(lines) + "\n"


def diagram_from_text(text: str, alphabet: Alphabet) -> Diagram:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "diagram" or lines[-1] != "end":
        raise DiagramError("bad diagram file")
    diag = Diagram(alphabet)
    nv = nd = 0
    origin: list[int] = []
    label: list[int] = []
    for ln in lines[1:-1]:
        parts = ln.split()
        if parts[0] == "vertices":
            nv = int(parts[1])
            diag.rot = [[] for _ in range(nv)]
        elif parts[0] == "base_vertex":
            diag.base_vertex = int(parts[1])
        elif parts[0] == "base_dart":
            diag.base_dart = int(parts[1])
        elif parts[0] == "darts":
            nd = int(parts[1])
            origin = [-1] * nd
            label = [-1] * nd
        elif parts[0] == "edge":
            d, u, v = int(parts[1]), int(parts[2]), int(parts[3])
            name = parts[4]
            if name == "1":
                lv = -1
            elif name.endswith("'"):
                lv = alphabet.letter(name[:-1], -1)
            else:
                lv = alphabet.letter(name, 1)
            origin[d], origin[d ^ 1] = u, v
            label[d], label[d ^ 1] = lv, _inv_label(lv)
        elif parts[0] == "rot":
            v = int(parts[1])
            diag.rot[v] = [int(x) for x in parts[2:]]
        else:
            raise DiagramError(f"bad diagram line: {ln}")
    diag.origin = origin
    diag.label = label
    errors = diag.check()
    if errors:
        raise DiagramError("; ".join(errors))
    return diag


def diagram_to_dot(diag: Diagram, rs: Optional[RelatorSet] = None) -> str:
    lines = ["graph diagram {"]
    if rs is not None:
        rep = verify_diagram(diag, rs)
        for i, f in enumerate(rep.faces):
            kind = "essential" if f.essential else "inessential"
            lines.append(f"  // face {i} ({kind}): darts {f.darts}")
    for d in range(0, diag.n_darts, 2):
        if diag.origin[d] < 0:
            continue
        letter = diag.label[d]
        name = "1" if letter < 0 else diag.alphabet.letter_name(letter)
        lines.append(
            f'  v{diag.origin[d]} -- v{diag.origin[d ^ 1]} [label="{name}"];'
        )
    lines.append("}")
    return "\n".join(lines)
