"""Exact Cayley-graph balls, canonical normal forms, and geodesic spanning trees.

The ball of radius N is built layer by layer.  A candidate word (a settled
normal form extended by one letter) is resolved to its vertex exactly:

* canonical mode: the candidate is closed under length-preserving half-flip
  rewrites (replace a subword equal to half of a closure element by the
  complementary half, inverted), restarting from any strictly shorter word a
  Dehn rule or a seam cancellation produces.  For presentations whose
  relators all have even length and whose pieces have length at most one,
  geodesic bigons are ladders with unit interior sides, every ladder has a
  flippable face, and the flip closure therefore reaches every geodesic word
  of the element; the ShortLex-least orbit member is a true canonical form
  and identification is a dictionary lookup.  Free presentations are
  trivially canonical.

* fallback mode (odd relators or pieces of length >= 2): orbit minima are
  still sound merge keys, and residual groups are cross-checked pairwise by
  Dehn equality tests inside buckets keyed by the image in the abelianized
  group, with a length bound that rules out equalities too short to bound a
  relator.

Vertex ids are assigned in deterministic BFS order, so each distance layer
is a contiguous id range.
"""

from __future__ import annotations

import random
from array import array
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from .dehn import (
    DehnIndex,
    dehn_index,
    free_reduce_bytes,
    inverse_bytes,
    word_to_bytes,
)
from .words import RelatorSet, Word, free_reduce

ORBIT_CAP = 200_000


class BallError(RuntimeError):
    pass


class UnsoundTruncationError(BallError):
    """The requested radius outruns the declared relator family truncation."""


class VertexCapError(BallError):
    pass


class NotVerifiedError(BallError):
    """The presentation failed C'(1/6) verification."""


@dataclass(frozen=True)
class SphereSlice:
    t: int
    members: range


def _orbit_tables(index: DehnIndex):
    """Merged (gram length, reducing rules, flip rules) scan tables."""
    gs = sorted(set(index.red) | set(index.flip))
    return [(g, index.red.get(g), index.flip.get(g)) for g in gs]


def _orbit_resolve(z0: bytes, tables, orbit_cap: int = ORBIT_CAP):
    """Close z0 under length-preserving flips.

    Returns ('short', w, seen) as soon as any rewrite strictly shortens, else
    ('same', min member, seen).
    """
    seen = {z0}
    stack = [z0]
    mn = z0
    while stack:
        z = stack.pop()
        if z < mn:
            mn = z
        n = len(z)
        for g, red, flip in tables:
            for i in range(n - g + 1):
                key = z[i : i + g]
                if red is not None:
                    rules = red.get(key)
                    if rules:
                        for sigma, repl, _ in rules:
                            if z.startswith(sigma, i):
                                w = free_reduce_bytes(z[:i] + repl + z[i + len(sigma) :])
                                return "short", w, seen
                if flip is not None:
                    frs = flip.get(key)
                    if frs:
                        for _, repl in frs:
                            z2 = free_reduce_bytes(z[:i] + repl + z[i + g :])
                            if len(z2) < n:
                                return "short", z2, seen
                            if z2 not in seen:
                                if len(seen) >= orbit_cap:
                                    raise BallError("flip orbit exceeded cap")
                                seen.add(z2)
                                stack.append(z2)
    return "same", mn, seen


def _abelianization_lattice(rs: RelatorSet) -> list[list[int]]:
    k = rs.alphabet.size
    rows = []
    for r in rs.relators:
        vec = [0] * k
        for c in r:
            vec[c // 2] += 1 if c % 2 == 0 else -1
        rows.append(vec)
    return _row_hnf(rows, k)


def _row_hnf(rows: list[list[int]], ncols: int) -> list[list[int]]:
    """Integer row Hermite form (positive pivots, echelon order)."""
    work = [r[:] for r in rows if any(r)]
    out: list[list[int]] = []
    for col in range(ncols):
        nz = [r for r in work if r[col] != 0]
        if not nz:
            continue
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            small = nz[0]
            for r in nz[1:]:
                q = r[col] // small[col]
                if q:
                    for j in range(ncols):
                        r[j] -= q * small[j]
            nz = [r for r in work if r[col] != 0]
        piv = nz[0]
        if piv[col] < 0:
            for j in range(ncols):
                piv[j] = -piv[j]
        out.append(piv[:])
        work.remove(piv)
        for r in work:
            if r[col] != 0:
                q = r[col] // piv[col]
                for j in range(ncols):
                    r[j] -= q * piv[j]
        work = [r for r in work if any(r)]
    return out


def _ab_reduce(vec: tuple[int, ...], hnf: list[list[int]]) -> tuple[int, ...]:
    v = list(vec)
    for row in hnf:
        col = next(j for j, x in enumerate(row) if x)
        q = v[col] // row[col]
        if q:
            for j in range(len(v)):
                v[j] -= q * row[j]
    return tuple(v)


def _ab_vector(wb: bytes, k: int) -> tuple[int, ...]:
    vec = [0] * k
    for c in wb:
        vec[c // 2] += 1 if c % 2 == 0 else -1
    return tuple(vec)


class CayleyBall:
    """The exact metric ball of radius N with canonical vertex names."""

    def __init__(self, rs, radius, norms, offsets, dist, neighbor, parent_slx,
                 layer_start, mode, identifications):
        self.relator_set = rs
        self.alphabet = rs.alphabet
        self.radius = radius
        self._arena = norms
        self._offsets = offsets  # np.int64, len n+1
        self.dist = dist  # np.int8, len n
        self.neighbor = neighbor  # np.int32 (n, 2k); -1 = outside the ball
        self.parent_slx = parent_slx  # np.int32, root -1
        self.layer_start = layer_start  # list len radius+2
        self.mode = mode
        self.identifications = identifications
        self._norm_index: Optional[dict[bytes, int]] = None

    @property
    def n_vertices(self) -> int:
        return len(self.dist)

    def word_bytes(self, v: int) -> bytes:
        return bytes(self._arena[self._offsets[v] : self._offsets[v + 1]])

    def word(self, v: int) -> Word:
        return tuple(self._arena[self._offsets[v] : self._offsets[v + 1]])

    def sphere(self, t: int) -> SphereSlice:
        if not (0 <= t <= self.radius):
            raise ValueError(f"sphere radius {t} outside ball of radius {self.radius}")
        return SphereSlice(t, range(self.layer_start[t], self.layer_start[t + 1]))

    def sphere_size(self, t: int) -> int:
        return self.layer_start[t + 1] - self.layer_start[t]

    def neighbors(self, v: int) -> Iterator[tuple[int, int]]:
        """Yield (letter, vertex) pairs; outside stubs are skipped."""
        row = self.neighbor[v]
        for c in range(row.shape[0]):
            u = int(row[c])
            if u >= 0:
                yield c, u

    def stub_letters(self, v: int) -> list[int]:
        row = self.neighbor[v]
        return [c for c in range(row.shape[0]) if row[c] == -1]

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Each undirected edge once, as (u, generator index, u*gen)."""
        nb = self.neighbor
        for v in range(self.n_vertices):
            row = nb[v]
            for gi in range(self.alphabet.size):
                u = int(row[2 * gi])
                if u >= 0:
                    yield v, gi, u

    def edge_count(self) -> int:
        return sum(1 for _ in self.edges())

    def norm_index(self) -> dict[bytes, int]:
        if self._norm_index is None:
            self._norm_index = {self.word_bytes(v): v for v in range(self.n_vertices)}
        return self._norm_index

    def locate(self, w: Word) -> Optional[int]:
        """Vertex of the group element of w, or None if outside the ball."""
        index = dehn_index(self.relator_set)
        tables = _orbit_tables(index)
        wb = index.reduce_bytes(word_to_bytes(free_reduce(w)))
        while True:
            kind, res, _ = _orbit_resolve(wb, tables)
            if kind == "same":
                wb = res
                break
            wb = index.reduce_bytes(res)
        v = self.norm_index().get(wb)
        if v is not None:
            return v
        if len(wb) > self.radius or self.mode == "canonical":
            return None
        # fallback presentations may hide the element behind a non-connected
        # orbit; scan the plausible layers with the exact equality test
        from .dehn import is_identity

        inv = tuple(c ^ 1 for c in reversed(wb))
        if self.relator_set.all_even():
            layers = range(len(wb) % 2, min(len(wb), self.radius) + 1, 2)
        else:
            layers = range(0, min(len(wb), self.radius) + 1)
        for t in layers:
            for v in self.sphere(t).members:
                if is_identity(self.word(v) + inv, self.relator_set):
                    return v
        return None

    def bfs_distances(self, source: int, max_depth: Optional[int] = None) -> dict[int, int]:
        """In-ball BFS distances from a vertex, optionally depth-capped."""
        seen = {source: 0}
        frontier = [source]
        d = 0
        nb = self.neighbor
        while frontier and (max_depth is None or d < max_depth):
            d += 1
            nxt = []
            for v in frontier:
                for u in nb[v]:
                    u = int(u)
                    if u >= 0 and u not in seen:
                        seen[u] = d
                        nxt.append(u)
            frontier = nxt
        return seen


def build_ball(
    rs: RelatorSet,
    radius: int,
    *,
    cap_vertices: int = 20_000_000,
    unsound_ok: bool = False,
    on_progress: Optional[Callable[[int, int], None]] = None,
) -> CayleyBall:
    """BFS construction of the radius-N ball with exact identification.

    Refuses radii whose soundness would need family relators beyond the
    shipped truncation unless ``unsound_ok`` is set.
    """
    from .dehn import relator_completeness_radius

    if radius < 0:
        raise ValueError("radius must be nonnegative")
    index = dehn_index(rs)  # raises DehnPreconditionError if not C'(1/6)
    if not relator_completeness_radius(rs, radius) and not unsound_ok:
        raise UnsoundTruncationError(
            f"radius {radius} needs family relators shorter than {4 * radius} "
            "that are outside the shipped truncation"
        )
    canonical = rs.is_free() or (rs.all_even() and index.report.max_piece_len() <= 1)
    if canonical:
        return _build_canonical(rs, index, radius, cap_vertices, on_progress)
    return _build_fallback(rs, index, radius, cap_vertices, on_progress)


def _freeze_ball(rs, radius, norms_list, dist_arr, nb_arr, parent_arr, layer_start,
                 mode, identifications) -> CayleyBall:
    n = len(norms_list)
    lengths = np.fromiter((len(w) for w in norms_list), dtype=np.int64, count=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    arena = b"".join(norms_list)
    k2 = rs.alphabet.num_letters
    neighbor = (
        np.frombuffer(memoryview(nb_arr), dtype=np.intc)
        .reshape(n, k2)
        .astype(np.int32, copy=True)
    )
    if (neighbor == -3).any():
        raise AssertionError("unresolved neighbor slot")
    return CayleyBall(
        rs,
        radius,
        arena,
        offsets,
        np.frombuffer(memoryview(dist_arr), dtype=np.int8).copy(),
        neighbor,
        np.frombuffer(memoryview(parent_arr), dtype=np.intc).astype(np.int32, copy=True),
        layer_start,
        mode,
        identifications,
    )


def _build_canonical(rs, index, radius, cap_vertices, on_progress) -> CayleyBall:
    k2 = rs.alphabet.num_letters
    tables = _orbit_tables(index)
    screen = index.screen  # [(g, frozenset of grams)]
    one = [bytes([c]) for c in range(k2)]

    norms_all: list[bytes] = [b""]
    dist_arr = array("b", [0])
    nb_arr = array("i", [-3] * k2)
    parent_arr = array("i", [-1])
    flags = bytearray([0])  # vertex norm contains some screen gram
    layer_start = [0, 1]
    identifications = 0

    prev_map: dict[bytes, int] = {}
    cur_map: dict[bytes, int] = {b"": 0}
    cur_norms: list[bytes] = [b""]

    for t in range(radius + 1):
        nxt_map: dict[bytes, int] = {}
        nxt_norms: list[bytes] = []
        orb_memo: dict[bytes, bytes] = {}
        short_memo: dict[bytes, int] = {}
        start, end = layer_start[t], layer_start[t + 1]
        growing = t < radius
        n_now = len(norms_all)
        def settle_short(res: bytes) -> int:
            sv = short_memo.get(res)
            if sv is None:
                kind2, res2, seen2 = _orbit_resolve(res, tables)
                if kind2 != "same":
                    raise AssertionError(
                        "candidate shortened twice; identification unsound"
                    )
                sv = prev_map[res2]
                for z in seen2:
                    short_memo[z] = sv
            return sv

        for u in range(start, end):
            wb = cur_norms[u - start]
            last_inv = wb[-1] ^ 1 if wb else -1
            base = u * k2
            u_flag = flags[u]
            lc = t + 1
            for c in range(k2):
                if c == last_inv:
                    nb_arr[base + c] = prev_map[wb[:-1]]
                    continue
                cand = wb + one[c]
                # screen: can any rewriting rule touch this word?  A rule
                # match not involving the new letter would be a match in the
                # parent norm, so gram-free parents only need the suffix.
                if u_flag:
                    hit = True
                else:
                    hit = False
                    for g, grams in screen:
                        if lc >= g and cand[lc - g :] in grams:
                            hit = True
                            break
                if not hit:
                    # gram-free words are flip-orbit singletons: the word is
                    # its own canonical form and cannot collide
                    if not growing:
                        nb_arr[base + c] = -1
                        continue
                    v = n_now
                    n_now += 1
                    if n_now > cap_vertices:
                        raise VertexCapError(f"vertex cap {cap_vertices} exceeded")
                    nxt_map[cand] = v
                    nxt_norms.append(cand)
                    norms_all.append(cand)
                    dist_arr.append(t + 1)
                    nb_arr.extend([-3] * k2)
                    parent_arr.append(u)
                    flags.append(0)
                    nb_arr[base + c] = v
                    continue
                hit_memo = orb_memo.get(cand)
                if hit_memo is None:
                    kind, res, seen = _orbit_resolve(cand, tables)
                    if kind == "short":
                        for z in seen:
                            orb_memo[z] = (res,)
                        sv = settle_short(res)
                        nb_arr[base + c] = sv
                        identifications += 1
                        continue
                    cf = res
                    for z in seen:
                        orb_memo[z] = cf
                elif type(hit_memo) is tuple:
                    sv = settle_short(hit_memo[0])
                    nb_arr[base + c] = sv
                    identifications += 1
                    continue
                else:
                    cf = hit_memo
                v = nxt_map.get(cf)
                if v is None:
                    if not growing:
                        nb_arr[base + c] = -1
                        continue
                    v = n_now
                    n_now += 1
                    if n_now > cap_vertices:
                        raise VertexCapError(f"vertex cap {cap_vertices} exceeded")
                    nxt_map[cf] = v
                    nxt_norms.append(cf)
                    norms_all.append(cf)
                    dist_arr.append(t + 1)
                    nb_arr.extend([-3] * k2)
                    parent_arr.append(cur_map[cf[:-1]])
                    flags.append(1)
                else:
                    identifications += 1
                nb_arr[base + c] = v
        if growing:
            layer_start.append(n_now)
            prev_map, cur_map, cur_norms = cur_map, nxt_map, nxt_norms
        if on_progress is not None:
            on_progress(t + 1 if growing else t, n_now)

    return _freeze_ball(
        rs, radius, norms_all, dist_arr, nb_arr, parent_arr, layer_start,
        "canonical", identifications,
    )


def _build_fallback(rs, index, radius, cap_vertices, on_progress) -> CayleyBall:
    """Layered build with bucketed pairwise verification.

    Orbit minima are used as sound merge keys; within a distance layer the
    groups (and the two settled layers below) are cross-checked with the
    exact Dehn equality test inside abelianization buckets, skipping pairs
    whose combined length cannot bound a relator.
    """
    from .dehn import is_identity

    k2 = rs.alphabet.num_letters
    k = rs.alphabet.size
    tables = _orbit_tables(index)
    one = [bytes([c]) for c in range(k2)]
    hnf = _abelianization_lattice(rs)
    m_min = rs.min_relator_length() or 0

    norms_all: list[bytes] = [b""]
    dist_arr = array("b", [0])
    nb_arr = array("i", [-3] * k2)
    parent_arr = array("i", [-1])
    layer_start = [0, 1]
    identifications = 0
    # all settled words ever seen, plus per-vertex norm and bucket registry
    word_vid: dict[bytes, int] = {b"": 0}
    buckets: dict[tuple, list[int]] = {_ab_reduce((0,) * k, hnf): [0]}

    def equal_words(wa: bytes, wc: bytes) -> bool:
        if len(wa) + len(wc) <= m_min // 2:
            return wa == wc
        return is_identity(tuple(wa) + tuple(c ^ 1 for c in reversed(wc)), rs)

    def resolve(wb: bytes):
        while True:
            kind, res, _ = _orbit_resolve(wb, tables)
            if kind == "same":
                return res
            wb = index.reduce_bytes(res)

    def locate_settled(wb: bytes) -> int:
        """Vertex of a word known to represent a settled element."""
        v = word_vid.get(wb)
        if v is not None:
            return v
        rep = resolve(wb)
        v = word_vid.get(rep)
        if v is not None:
            word_vid[wb] = v
            return v
        key = _ab_reduce(_ab_vector(rep, k), hnf)
        for cand_v in buckets.get(key, ()):
            if equal_words(rep, norms_all[cand_v]):
                word_vid[wb] = word_vid[rep] = cand_v
                return cand_v
        raise AssertionError("settled element not found; identification unsound")

    for t in range(radius + 1):
        start, end = layer_start[t], layer_start[t + 1]
        growing = t < radius
        # pass 1: resolve every candidate to a same-length rep or a shorter word
        records = []  # (u, c, rep bytes or None, settled vid or None)
        for u in range(start, end):
            wb = norms_all[u]
            last_inv = wb[-1] ^ 1 if wb else -1
            for c in range(k2):
                if c == last_inv:
                    records.append((u, c, None, word_vid[wb[:-1]]))
                    continue
                cand = wb + one[c]
                rep = resolve(cand)
                if len(rep) <= t:
                    records.append((u, c, None, locate_settled(rep)))
                else:
                    records.append((u, c, rep, None))
        # pass 2: group by rep, then union within abelianization buckets
        groups: dict[bytes, list[int]] = {}
        for i, (_, _, rep, sv) in enumerate(records):
            if rep is not None:
                groups.setdefault(rep, []).append(i)
        reps = sorted(groups)
        rep_key = {r: _ab_reduce(_ab_vector(r, k), hnf) for r in reps}
        assign: dict[bytes, int] = {}
        by_bucket: dict[tuple, list[bytes]] = {}
        for r in reps:
            by_bucket.setdefault(rep_key[r], []).append(r)
        n_now = len(norms_all)
        for key, rs_in_bucket in sorted(by_bucket.items()):
            settled_here = buckets.get(key, ())
            merged: list[list[bytes]] = []
            for r in rs_in_bucket:
                placed = False
                for grp in merged:
                    if equal_words(r, grp[0]):
                        grp.append(r)
                        placed = True
                        break
                if not placed:
                    merged.append([r])
            for grp in merged:
                vid = None
                for sv in settled_here:
                    if equal_words(grp[0], norms_all[sv]):
                        vid = sv
                        break
                if vid is None and growing:
                    vid = n_now
                    n_now += 1
                    if n_now > cap_vertices:
                        raise VertexCapError(f"vertex cap {cap_vertices} exceeded")
                    norm = min(grp, key=lambda w: (len(w), w))
                    norms_all.append(norm)
                    dist_arr.append(t + 1)
                    nb_arr.extend([-3] * k2)
                    parent_arr.append(word_vid[norm[:-1]])
                    word_vid[norm] = vid
                    buckets.setdefault(key, []).append(vid)
                if vid is not None:
                    identifications += len(grp) - 1
                    for r in grp:
                        assign[r] = vid
                        word_vid.setdefault(r, vid)
                else:
                    for r in grp:
                        assign[r] = -1  # outside the ball
        # pass 3: fill neighbor slots
        for u, c, rep, sv in records:
            nb_arr[u * k2 + c] = sv if rep is None else assign[rep]
        if growing:
            layer_start.append(n_now)
        if on_progress is not None:
            on_progress(t + 1 if growing else t, n_now)

    return _freeze_ball(
        rs, radius, norms_all, dist_arr, nb_arr, parent_arr, layer_start,
        "fallback", identifications,
    )


@dataclass
class GeodesicTree:
    """A geodesic spanning tree of a ball, rooted at the identity vertex."""

    ball: CayleyBall
    policy: str
    seed: Optional[int]
    parent: np.ndarray  # int32, root -1

    def path(self, y: int) -> list[int]:
        """Vertices of the tree path from the root to y."""
        out = [y]
        guard = self.ball.n_vertices + 1
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
            if len(out) > guard:
                raise BallError("parent table contains a cycle")
        if out[-1] != 0:
            raise BallError("tree path does not reach the root")
        out.reverse()
        return out

    def meet(self, x: int, y: int) -> int:
        """Deepest common vertex of the two root paths."""
        px, py = self.path(x), self.path(y)
        m = 0
        for a, b in zip(px, py):
            if a != b:
                break
            m = a
        return m


def spanning_tree(ball: CayleyBall, policy: str = "shortlex",
                  seed: Optional[int] = None) -> GeodesicTree:
    """Geodesic spanning tree under the named parent policy.

    ``shortlex`` takes the ShortLex-least neighbor one layer down (equal to
    the normal-form prefix vertex); ``random`` makes a seeded uniform choice
    among the layer-down neighbors, independently per vertex in id order.
    """
    if policy == "shortlex":
        return GeodesicTree(ball, policy, None, ball.parent_slx.copy())
    if policy == "random":
        rng = random.Random(0 if seed is None else seed)
        parent = np.full(ball.n_vertices, -1, dtype=np.int32)
        dist = ball.dist
        nb = ball.neighbor
        for v in range(1, ball.n_vertices):
            dv = int(dist[v])
            cands = [int(u) for u in nb[v] if u >= 0 and dist[u] == dv - 1]
            parent[v] = cands[rng.randrange(len(cands))]
        return GeodesicTree(ball, policy, seed if seed is not None else 0, parent)
    raise ValueError(f"unknown spanning tree policy {policy!r}")


def tree_path(tree: GeodesicTree, y: int) -> list[int]:
    return tree.path(y)


def sphere(ball: CayleyBall, t: int) -> SphereSlice:
    return ball.sphere(t)


def to_dot(ball: CayleyBall, max_vertices: int = 5000) -> str:
    """DOT export with generator labels on edges."""
    if ball.n_vertices > max_vertices:
        raise BallError(f"ball too large for DOT export ({ball.n_vertices} vertices)")
    names = ball.alphabet.generators
    lines = ["graph cayley_ball {"]
    for v in range(ball.n_vertices):
        lines.append(f'  v{v} [label="{ball.alphabet.word_str(ball.word(v))}"];')
    for u, gi, v in ball.edges():
        lines.append(f'  v{u} -- v{v} [label="{names[gi]}"];')
    lines.append("}")
    return "\n".join(lines)


def to_adjacency_text(ball: CayleyBall) -> str:
    """One vertex per line: index, distance, normal form, neighbor list."""
    out = []
    for v in range(ball.n_vertices):
        nbs = " ".join(
            f"{ball.alphabet.letter_name(c)}:{u}" for c, u in ball.neighbors(v)
        )
        word = ball.alphabet.word_str(ball.word(v))
        out.append(f"{v}\t{int(ball.dist[v])}\t{word}\t{nbs}")
    return "\n".join(out) + "\n"
