"""Extraction of maximal simple geodesic triangles from a ball and tree.

Given tree paths to x and y and a geodesic [x, y], the triangle corner a is
the divergence vertex of the two tree paths; b is the last vertex of [x, y]
(walking from x) that lies on the tree path above a, and c the first that
lies on the y-side path.  When b comes after c the configuration degenerates
to a tripod.  With b strictly before c the boundary is automatically a
simple closed curve: the two tree arcs meet only at a, and maximality of b
and minimality of c keep the middle arc off them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .cayley import CayleyBall, GeodesicTree
from .words import Word


class NotGeodesicError(ValueError):
    pass


@dataclass(frozen=True)
class Tripod:
    meet: int
    x: int
    y: int


@dataclass
class GeodesicTriangle:
    a: int
    b: int
    c: int
    alpha: tuple[int, ...]  # vertex path [b, c]
    beta: tuple[int, ...]  # vertex path [c, a]
    gamma: tuple[int, ...]  # vertex path [a, b]
    simple: bool
    certified_geodesic: bool  # sides certified geodesic in the group, not just in-ball

    @property
    def perimeter(self) -> int:
        return len(self.alpha) + len(self.beta) + len(self.gamma) - 3

    def boundary_cycle(self) -> list[int]:
        """Boundary vertices a .. b .. c .. back to a, each join once."""
        return list(self.gamma[:-1]) + list(self.alpha[:-1]) + list(self.beta[:-1])


def _edge_letter(ball: CayleyBall, u: int, v: int) -> int:
    row = ball.neighbor[u]
    for c in range(row.shape[0]):
        if row[c] == v:
            return c
    raise NotGeodesicError(f"vertices {u}, {v} are not adjacent")


def path_word(ball: CayleyBall, path: Sequence[int]) -> Word:
    return tuple(_edge_letter(ball, path[i], path[i + 1]) for i in range(len(path) - 1))


def boundary_word(ball: CayleyBall, tri: GeodesicTriangle) -> Word:
    """Label of the triangle boundary gamma * alpha * beta, read from a."""
    return (
        path_word(ball, tri.gamma)
        + path_word(ball, tri.alpha)
        + path_word(ball, tri.beta)
    )


def _check_root_path(ball: CayleyBall, p: Sequence[int], name: str) -> None:
    if not p or p[0] != 0:
        raise NotGeodesicError(f"{name} must start at the root")
    if len(p) - 1 != int(ball.dist[p[-1]]):
        raise NotGeodesicError(f"{name} is not geodesic")
    for i in range(len(p) - 1):
        _edge_letter(ball, p[i], p[i + 1])


def _extract(ball: CayleyBall, px: list[int], py: list[int], w: list[int]):
    x, y = px[-1], py[-1]
    if x == y:
        return Tripod(x, x, y)
    ia = 0
    for i in range(min(len(px), len(py))):
        if px[i] != py[i]:
            break
        ia = i
    a = px[ia]

    pos_px = {v: i for i, v in enumerate(px) if i >= ia}
    pos_py = {v: i for i, v in enumerate(py) if i >= ia}
    b_idx = max(j for j, v in enumerate(w) if v in pos_px)
    c_idx = min(j for j, v in enumerate(w) if v in pos_py)
    if b_idx >= c_idx:
        return Tripod(a, x, y)
    b, c = w[b_idx], w[c_idx]

    gamma = tuple(px[ia : pos_px[b] + 1])  # a .. b
    alpha = tuple(w[b_idx : c_idx + 1])  # b .. c
    beta = tuple(reversed(py[ia : pos_py[c] + 1]))  # c .. a
    cycle = list(gamma[:-1]) + list(alpha[:-1]) + list(beta[:-1])
    simple = len(set(cycle)) == len(cycle)
    if not simple:
        raise AssertionError("trimmed triangle boundary is not simple")
    L = len(w) - 1
    dx, dy = int(ball.dist[x]), int(ball.dist[y])
    certified = dx + dy + L - 1 <= 2 * ball.radius
    return GeodesicTriangle(a, b, c, alpha, beta, gamma, simple, certified)


def maximal_simple_triangle(
    ball: CayleyBall,
    tree_path_x: Sequence[int],
    tree_path_y: Sequence[int],
    geodesic_xy: Sequence[int],
):
    """The maximal simple geodesic triangle of the configuration, or a
    Tripod when it degenerates.  Rejects non-geodesic inputs."""
    px, py, w = list(tree_path_x), list(tree_path_y), list(geodesic_xy)
    _check_root_path(ball, px, "tree path to x")
    _check_root_path(ball, py, "tree path to y")
    x, y = px[-1], py[-1]
    if not w or w[0] != x or w[-1] != y:
        raise NotGeodesicError("geodesic [x,y] does not join the path endpoints")
    L = len(w) - 1
    for i in range(L):
        _edge_letter(ball, w[i], w[i + 1])
    if L:
        dmap = ball.bfs_distances(x, max_depth=L)
        if dmap.get(y) != L:
            raise NotGeodesicError("[x,y] is longer than the in-ball distance")
    return _extract(ball, px, py, w)


def shortlex_geodesic(ball: CayleyBall, x: int, y: int,
                      dist_to_y: Optional[dict[int, int]] = None) -> list[int]:
    """ShortLex-least in-ball geodesic from x to y (letters tried in order)."""
    if dist_to_y is None:
        dist_to_y = ball.bfs_distances(y)
    L = dist_to_y[x]
    path = [x]
    cur = x
    for step in range(L, 0, -1):
        row = ball.neighbor[cur]
        for cletter in range(row.shape[0]):
            u = int(row[cletter])
            if u >= 0 and dist_to_y.get(u) == step - 1:
                cur = u
                path.append(u)
                break
        else:
            raise NotGeodesicError("distance map inconsistent")
    return path


def enumerate_triangles(
    ball: CayleyBall,
    tree: GeodesicTree,
    perimeter_cap: int,
    *,
    xy_cap: Optional[int] = None,
    dist_cap: Optional[int] = None,
    certified_only: bool = True,
) -> Iterator[GeodesicTriangle]:
    """All maximal simple triangles from vertex pairs (x, y) with
    dist(x), dist(y) <= dist_cap and d(x, y) <= xy_cap, deduplicated by
    corner triple; the side [x, y] is the ShortLex-least in-ball geodesic.

    ``certified_only`` keeps the pairs whose in-ball distance provably equals
    the group distance (dist(x) + dist(y) + d(x,y) - 1 <= 2N), so every side
    is geodesic in the group and not merely in the ball.

    Emission order is fixed: sorted by (dist(b), dist(c), corner ids).
    """
    if xy_cap is None:
        xy_cap = perimeter_cap // 2
    if dist_cap is None:
        dist_cap = ball.radius
    dist = ball.dist
    n = ball.n_vertices
    seen: set[tuple[int, int, int]] = set()
    found: list[tuple[tuple[int, int, int, int, int, int], GeodesicTriangle]] = []
    paths: dict[int, list[int]] = {}

    def tree_path_of(v: int) -> list[int]:
        p = paths.get(v)
        if p is None:
            p = tree.path(v)
            paths[v] = p
        return p

    for y in range(n):
        dy = int(dist[y])
        if dy > dist_cap:
            continue
        dmap = ball.bfs_distances(y, max_depth=xy_cap)
        for x, L in dmap.items():
            if L == 0:
                continue
            dx = int(dist[x])
            if dx > dist_cap:
                continue
            if (dx, x) >= (dy, y):
                continue
            if certified_only and dx + dy + L - 1 > 2 * ball.radius:
                continue
            w = shortlex_geodesic(ball, x, y, dmap)
            tri = _extract(ball, tree_path_of(x), tree_path_of(y), w)
            if isinstance(tri, Tripod):
                continue
            if tri.perimeter > perimeter_cap:
                continue
            key = (tri.a, tri.b, tri.c)
            if key in seen:
                continue
            seen.add(key)
            found.append(
                (
                    (int(dist[tri.b]), int(dist[tri.c]), tri.a, tri.b, tri.c, 0),
                    tri,
                )
            )
    found.sort(key=lambda kv: kv[0])
    for _, tri in found:
        yield tri
