"""Tightness audits of the combing induced by a geodesic spanning tree.

T(y, s) is the union of the root paths of all vertices strictly within s of
y; the combing is (epsilon, k)-tight on the audited region if every such
union meets every sphere S(t), t <= d(root, y) - r, in at most k vertices.
Open balls with rational radius are decided exactly: an integer distance d
lies in B(y, s) iff d <= (s.numerator - 1) // s.denominator.

A (y, r) pair is audited only if B(y, epsilon*r) is certifiably interior,
i.e. dist(y) + epsilon*r <= radius; distances measured inside the ball are
then true distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .cayley import CayleyBall, GeodesicTree


class RegionUncertainError(RuntimeError):
    """B(y, s) may extend beyond the ball; distances would be unreliable."""


@dataclass(frozen=True)
class TightnessParams:
    epsilon: Fraction
    k: int
    r_values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.k < 0:
            raise ValueError("k must be a nonnegative integer")
        if any(r < 1 for r in self.r_values):
            raise ValueError("r values must be >= 1")


@dataclass(frozen=True)
class ReachSet:
    y: int
    s: Fraction
    union_vertices: frozenset[int]


@dataclass(frozen=True)
class TightnessViolation:
    y: int
    r: int
    t: int
    hits: tuple[int, ...]  # distinct crossing vertices on S(t)
    witnesses: tuple[tuple[int, int], ...]  # (crossing vertex, example y')


@dataclass
class TightnessReport:
    params: TightnessParams
    audited_pairs: int  # (y, r) pairs fully audited
    skipped_pairs: int  # (y, r) pairs skipped for boundary uncertainty
    audited_triples: int  # (y, r, t) triples
    max_hits: int
    violations: tuple[TightnessViolation, ...]

    @property
    def skipped_fraction(self) -> Fraction:
        total = self.audited_pairs + self.skipped_pairs
        return Fraction(self.skipped_pairs, total) if total else Fraction(0)


def open_ball_depth(s: Fraction) -> int:
    """Largest integer distance strictly below s."""
    s = Fraction(s)
    return (s.numerator - 1) // s.denominator


def reach_set(ball: CayleyBall, tree: GeodesicTree, y: int, s) -> ReachSet:
    """Exact union of combing paths to every vertex strictly within s of y."""
    s = Fraction(s)
    if Fraction(int(ball.dist[y])) + s > ball.radius:
        raise RegionUncertainError(
            f"B({y}, {s}) is not certifiably inside the radius-{ball.radius} ball"
        )
    members = ball.bfs_distances(y, max_depth=open_ball_depth(s))
    union: set[int] = set()
    for y2 in members:
        union.update(tree.path(y2))
    return ReachSet(y, s, frozenset(union))


def _sphere_crossings(path: Iterable[int], dist) -> dict[int, list[int]]:
    """Map each distance value to the path vertices lying at it."""
    out: dict[int, list[int]] = {}
    for v in path:
        out.setdefault(int(dist[v]), []).append(v)
    return out


def audit_tightness(
    ball: CayleyBall, tree: GeodesicTree, params: TightnessParams
) -> TightnessReport:
    """Count |T(y, epsilon*r) cap S(t)| over the boundary-sound region.

    Sound (y, r) pairs satisfy dist(y) >= r and dist(y) + epsilon*r <= N;
    t runs over the integers 0..dist(y)-r.
    """
    eps = params.epsilon
    k = params.k
    dist = ball.dist
    n = ball.n_vertices
    radius = ball.radius
    audited_pairs = skipped_pairs = audited_triples = 0
    max_hits = 0
    violations: list[TightnessViolation] = []
    for r in params.r_values:
        er = eps * r
        depth = open_ball_depth(er)
        # soundness threshold dist(y) <= N - eps*r, as an exact integer bound
        dist_hi = (radius * er.denominator - er.numerator) // er.denominator
        for y in range(n):
            dy = int(dist[y])
            if dy < r:
                continue
            if dy > dist_hi:
                skipped_pairs += 1
                continue
            audited_pairs += 1
            t_max = dy - r
            if depth == 0:
                # B(y, er) = {y}: one combing path, which meets each sphere
                # exactly once provided it really is geodesic
                p = tree.path(y)
                if (
                    k >= 1
                    and len(p) == dy + 1
                    and all(int(dist[p[i]]) == i for i in range(len(p)))
                ):
                    audited_triples += t_max + 1
                    if max_hits < 1:
                        max_hits = 1
                    continue
                members = [y]
            else:
                members = list(ball.bfs_distances(y, max_depth=depth))
            crossings = [
                (y2, _sphere_crossings(tree.path(y2), dist)) for y2 in members
            ]
            for t in range(t_max + 1):
                hits: dict[int, int] = {}
                for y2, cr in crossings:
                    for v in cr.get(t, ()):
                        hits.setdefault(v, y2)
                audited_triples += 1
                h = len(hits)
                if h > max_hits:
                    max_hits = h
                if h > k:
                    hh = tuple(sorted(hits))
                    violations.append(
                        TightnessViolation(
                            y, r, t, hh, tuple((v, hits[v]) for v in hh)
                        )
                    )
    violations.sort(key=lambda v: (v.r, v.y, v.t))
    return TightnessReport(
        params=params,
        audited_pairs=audited_pairs,
        skipped_pairs=skipped_pairs,
        audited_triples=audited_triples,
        max_hits=max_hits,
        violations=tuple(violations),
    )


@dataclass
class ForensicsBundle:
    violation: TightnessViolation
    divergence_vertices: tuple[int, ...]
    witnesses: tuple[int, ...]
    witness_distances: dict[tuple[int, int], int]
    defect_vertices: tuple[int, ...]  # tree vertices whose parent is not one layer down
    subgraph_edges: tuple[tuple[int, int], ...]


def violation_forensics(
    report: TightnessReport, ball: CayleyBall, tree: GeodesicTree
) -> list[ForensicsBundle]:
    """Per-violation evidence: the diverging crossing vertices, pairwise
    witness distances, any non-geodesic parent links on the involved paths,
    and the union-of-paths subgraph."""
    bundles = []
    dist = ball.dist
    parent = tree.parent
    for vio in report.violations:
        witnesses = tuple(sorted({y2 for _, y2 in vio.witnesses}))
        wd: dict[tuple[int, int], int] = {}
        for i, w1 in enumerate(witnesses):
            dmap = ball.bfs_distances(w1)
            for w2 in witnesses[i + 1 :]:
                wd[(w1, w2)] = dmap.get(w2, -1)
        defects: set[int] = set()
        edges: set[tuple[int, int]] = set()
        for y2 in witnesses:
            path = tree.path(y2)
            for i in range(1, len(path)):
                v = path[i]
                edges.add((path[i - 1], v))
                p = int(parent[v])
                if p >= 0 and dist[p] != dist[v] - 1:
                    defects.add(v)
        bundles.append(
            ForensicsBundle(
                violation=vio,
                divergence_vertices=vio.hits,
                witnesses=witnesses,
                witness_distances=wd,
                defect_vertices=tuple(sorted(defects)),
                subgraph_edges=tuple(sorted(edges)),
            )
        )
    return bundles
