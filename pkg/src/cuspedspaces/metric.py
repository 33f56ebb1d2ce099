"""Certified metric queries on truncated complexes.

BFS distances come with an exactness certificate: an answer is exact when
no shortcut through the missing part of the infinite complex can exist,
which holds whenever no frontier vertex was settled strictly closer than
value - 1.  Every reported distance is an upper bound for the true one
because the truncation is a subgraph of the infinite complex.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .complex2 import Complex2
from .horoball import Horoball, HoroballError


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class EdgePath:
    """A vertex-edge walk; closed when the endpoints coincide."""

    vertices: tuple[int, ...]
    edges: tuple[int, ...]

    def __post_init__(self):
        if len(self.vertices) != len(self.edges) + 1:
            raise MetricError("vertex/edge counts inconsistent")

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def is_closed(self) -> bool:
        return self.start == self.end

    def reversed(self) -> "EdgePath":
        return EdgePath(tuple(reversed(self.vertices)), tuple(reversed(self.edges)))

    def concat(self, other: "EdgePath") -> "EdgePath":
        if self.end != other.start:
            raise MetricError("paths do not compose")
        return EdgePath(self.vertices + other.vertices[1:], self.edges + other.edges)

    def subpath(self, i: int, j: int) -> "EdgePath":
        return EdgePath(self.vertices[i : j + 1], self.edges[i:j])


def path_from_vertices(cx: Complex2, vids: Sequence[int]) -> EdgePath:
    """Resolve consecutive vertex pairs to edges (smallest id on ties)."""
    edges = []
    for a, b in zip(vids, vids[1:]):
        edges.append(cx.edge_between(a, b))
    return EdgePath(tuple(vids), tuple(edges))


def trivial_path(vid: int) -> EdgePath:
    return EdgePath((vid,), ())


@dataclass(frozen=True)
class CertifiedDistance:
    value: int
    exact: bool


def bfs_distances(cx: Complex2, source: int) -> list[int]:
    """Distance table from a single source; -1 for unreached."""
    dist = [-1] * len(cx.vertices)
    dist[source] = 0
    queue = deque([source])
    neighbors = cx.neighbors
    while queue:
        x = queue.popleft()
        dx = dist[x] + 1
        for y in neighbors[x]:
            if dist[y] == -1:
                dist[y] = dx
                queue.append(y)
    return dist


def multi_source_distances(cx: Complex2, sources: Iterable[int]) -> list[int]:
    dist = [-1] * len(cx.vertices)
    queue = deque()
    for s in sources:
        if dist[s] != 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        x = queue.popleft()
        dx = dist[x] + 1
        for y in cx.neighbors[x]:
            if dist[y] == -1:
                dist[y] = dx
                queue.append(y)
    return dist


class DistanceCache:
    """Memoized single-source BFS tables."""

    def __init__(self, cx: Complex2):
        self.cx = cx
        self._tables: dict[int, list[int]] = {}

    def table(self, source: int) -> list[int]:
        t = self._tables.get(source)
        if t is None:
            t = bfs_distances(self.cx, source)
            self._tables[source] = t
        return t

    def distance(self, u: int, v: int) -> int:
        return self.table(u)[v]


def _exactness(cx: Complex2, dist: list[int], value: int) -> bool:
    """No shortcut through truncated territory can beat ``value``.

    A shorter path in the infinite complex would have to leave the region
    whose stars are complete, so some frontier vertex would sit at
    distance <= value - 2 from the source.
    """
    if value <= 1:
        return True
    cap = value - 2
    for vid, d in enumerate(dist):
        if 0 <= d <= cap and cx.vertices[vid].frontier:
            return False
    return True


def bfs_distance(cx: Complex2, u: int, v: int) -> CertifiedDistance:
    dist = bfs_distances(cx, u)
    if dist[v] < 0:
        raise MetricError(
            f"vertices {u} and {v} are disconnected within the truncation"
        )
    return CertifiedDistance(dist[v], _exactness(cx, dist, dist[v]))


def bfs_geodesic(cx: Complex2, u: int, v: int) -> EdgePath:
    """Deterministic shortest path: ties broken by least neighbor id."""
    dist = bfs_distances(cx, u)
    if dist[v] < 0:
        raise MetricError(
            f"vertices {u} and {v} are disconnected within the truncation"
        )
    back = [v]
    cur = v
    while cur != u:
        cur = min(n for n in cx.neighbors[cur] if dist[n] == dist[cur] - 1)
        back.append(cur)
    back.reverse()
    return path_from_vertices(cx, back)


def ball(cx: Complex2, center: int, radius: int) -> tuple[Complex2, dict[int, int]]:
    """B(v, K): the 1-skeleton ball plus the faces with boundary inside it."""
    if radius < 0:
        raise MetricError("radius must be >= 0")
    dist = bfs_distances(cx, center)
    inside = [vid for vid, d in enumerate(dist) if 0 <= d <= radius]
    return cx.full_subcomplex(inside)


def ball_vertex_set(cx: Complex2, center: int, radius: int) -> set[int]:
    dist = bfs_distances(cx, center)
    return {vid for vid, d in enumerate(dist) if 0 <= d <= radius}


# -----------------------------------------------------------------------
# Horoball geodesic normal form


def _hops(d: int, k: int) -> int:
    if d == 0:
        return 0
    if k == 0:
        return d
    return -(-d // (1 << k))  # ceil


def horoball_geodesic(h: Horoball, u: int, v: int) -> EdgePath:
    """Geodesic in normal form: ascend, at most three horizontal hops,
    descend.  Chooses the lowest level that attains the minimum length
    with a horizontal segment of length <= 3.
    """
    (i, j), (y, l) = h.local(u), h.local(v)
    d = h.base_distance(i, y)
    if d == 0:
        lo, hi = min(j, l), max(j, l)
        vids = [h.vertex_at(i, k) for k in range(j, l + (1 if l >= j else -1), 1 if l >= j else -1)]
        return path_from_vertices(h.complex, vids)
    lowest = max(j, l)
    # the length is eventually increasing in the level, so scanning up to
    # where a single hop suffices finds the global minimum
    k_top = max(lowest, d.bit_length() + 1)
    best = None
    for k in range(lowest, k_top + 1):
        length = (k - j) + (k - l) + _hops(d, k)
        if best is None or length < best[0]:
            best = (length, k)
    assert best is not None
    target = None
    for k in range(lowest, k_top + 1):
        if (k - j) + (k - l) + _hops(d, k) == best[0] and _hops(d, k) <= 3:
            target = k
            break
    assert target is not None
    if target > h.depth_cap:
        raise HoroballError(
            f"normal form needs level {target} above the depth cap {h.depth_cap}"
        )
    vids = [h.vertex_at(i, kk) for kk in range(j, target + 1)]
    geo = h.base_geodesic(i, y)
    step = 1 << target if target > 0 else 1
    pos = 0
    while pos < d:
        pos = min(pos + step, d)
        vids.append(h.vertex_at(geo[pos], target))
    for kk in range(target - 1, l - 1, -1):
        vids.append(h.vertex_at(y, kk))
    return path_from_vertices(h.complex, vids)


def hausdorff_distance(cx: Complex2, p: EdgePath, q: EdgePath) -> int:
    """Symmetrized vertex-resolution Hausdorff distance in the 1-skeleton."""
    dq = multi_source_distances(cx, set(q.vertices))
    dp = multi_source_distances(cx, set(p.vertices))
    a = max(dq[v] for v in p.vertices)
    b = max(dp[v] for v in q.vertices)
    if a < 0 or b < 0:
        raise MetricError("paths lie in different components")
    return max(a, b)


# -----------------------------------------------------------------------
# Geodesic triangles, internal points, thinness


@dataclass(frozen=True)
class PointOnPath:
    """Marker at half-integer distance along a path: a vertex when the
    doubled position is even, an edge midpoint when odd."""

    path: EdgePath
    pos2: int                      # 2 x distance from the path start

    @property
    def is_vertex(self) -> bool:
        return self.pos2 % 2 == 0

    def nearest_vertex(self) -> int:
        return self.path.vertices[self.pos2 // 2]


@dataclass(frozen=True)
class GeodesicTriangle:
    corners: tuple[int, int, int]
    sides: tuple[EdgePath, EdgePath, EdgePath]   # sides[i] opposite corners[i]
    internal_params: tuple[Fraction, Fraction, Fraction]
    internal_points: tuple[PointOnPath, PointOnPath, PointOnPath]


def internal_points(
    cx: Complex2,
    corners: tuple[int, int, int],
    sides: tuple[EdgePath, EdgePath, EdgePath],
) -> GeodesicTriangle:
    """Internal points of a geodesic triangle.

    ``sides[i]`` joins the two corners other than ``corners[i]``; the
    point c_i sits on it, at distance (b + c - a)/2 from each adjacent
    corner, where a is the opposite side length.
    """
    x1, x2, x3 = corners
    s1, s2, s3 = sides
    for s, (p, q) in ((s1, (x2, x3)), (s2, (x1, x3)), (s3, (x1, x2))):
        if {s.start, s.end} != ({p, q} if p != q else {p}):
            raise MetricError("side endpoints do not match the corners")
    a, b, c = len(s1), len(s2), len(s3)
    if a > b + c or b > a + c or c > a + b:
        raise MetricError("side lengths violate the triangle inequality")
    p1 = Fraction(b + c - a, 2)
    p2 = Fraction(a + c - b, 2)
    p3 = Fraction(a + b - c, 2)

    def place(side: EdgePath, from_corner: int, dist: Fraction) -> PointOnPath:
        pos2 = int(2 * dist)
        if side.start != from_corner:
            pos2 = 2 * len(side) - pos2
        return PointOnPath(side, pos2)

    # c1 on s1 at distance p2 from x2; c2 on s2 at p1 from x1; c3 on s3 at p1 from x1
    c1 = place(s1, x2, p2)
    c2 = place(s2, x1, p1)
    c3 = place(s3, x1, p1)
    return GeodesicTriangle(corners, sides, (p1, p2, p3), (c1, c2, c3))


def _oriented(side: EdgePath, from_corner: int) -> EdgePath:
    return side if side.start == from_corner else side.reversed()


def triangle_thinness(cache: DistanceCache, tri: GeodesicTriangle) -> tuple[int, dict]:
    """Max distance between matched points on the two sides at each corner.

    Matched parameters are evaluated at integer values, rounding the
    half-integer internal parameter down on both sides symmetrically.
    """
    best = -1
    witness: dict = {}
    corner_sides = ((tri.corners[0], tri.sides[2], tri.sides[1], tri.internal_params[0]),
                    (tri.corners[1], tri.sides[0], tri.sides[2], tri.internal_params[1]),
                    (tri.corners[2], tri.sides[1], tri.sides[0], tri.internal_params[2]))
    for corner, side_a, side_b, param in corner_sides:
        pa = _oriented(side_a, corner)
        pb = _oriented(side_b, corner)
        for t in range(int(param) + 1):
            va, vb = pa.vertices[t], pb.vertices[t]
            d = cache.distance(va, vb)
            if d > best:
                best = d
                witness = {"corner": corner, "t": t, "u": va, "v": vb, "distance": d}
    return best, witness


# -----------------------------------------------------------------------
# Geodesic enumeration and delta estimation


def geodesic_dag_vertices(dist_u: list[int], dist_v: list[int], d: int) -> list[int]:
    """Vertices lying on at least one geodesic between the two sources."""
    return [vid for vid in range(len(dist_u))
            if dist_u[vid] >= 0 and dist_v[vid] >= 0 and dist_u[vid] + dist_v[vid] == d]


def count_geodesics(cx: Complex2, u: int, v: int, dist_u: list[int], cap: int) -> int:
    """Number of geodesics from u to v, saturating at ``cap``."""
    d = dist_u[v]
    counts = {u: 1}
    frontier = [u]
    for layer in range(1, d + 1):
        nxt: dict[int, int] = {}
        for x in frontier:
            for y in cx.neighbors[x]:
                if dist_u[y] == layer:
                    nxt[y] = min(cap, nxt.get(y, 0) + counts[x])
        counts.update(nxt)
        frontier = list(nxt)
    return min(cap, counts.get(v, 0))


def enumerate_geodesics(
    cx: Complex2, u: int, v: int, dist_u: list[int], cap: int
) -> list[EdgePath] | None:
    """All geodesics u -> v when there are at most ``cap``; else None."""
    if count_geodesics(cx, u, v, dist_u, cap + 1) > cap:
        return None
    out: list[EdgePath] = []
    d = dist_u[v]
    stack = [(v, [v])]
    while stack:
        cur, acc = stack.pop()
        if cur == u:
            out.append(path_from_vertices(cx, list(reversed(acc))))
            continue
        for n in sorted(cx.neighbors[cur], reverse=True):
            if dist_u[n] == dist_u[cur] - 1:
                stack.append((n, acc + [n]))
    out.sort(key=lambda p: p.vertices)
    return out


def sample_geodesics(
    cx: Complex2, u: int, v: int, dist_u: list[int], n: int, rng: random.Random
) -> list[EdgePath]:
    """Seeded sample of geodesics drawn via backward random walks."""
    seen: set[tuple[int, ...]] = set()
    out: list[EdgePath] = []
    for _ in range(n):
        cur = v
        acc = [v]
        while cur != u:
            options = [x for x in cx.neighbors[cur] if dist_u[x] == dist_u[cur] - 1]
            cur = rng.choice(options)
            acc.append(cur)
        key = tuple(acc)
        if key not in seen:
            seen.add(key)
            out.append(path_from_vertices(cx, list(reversed(acc))))
    return out


@dataclass
class DeltaScanConfig:
    n_triples: int = 200
    seed: int = 0
    exhaustive: bool = False
    vertex_pool: Sequence[int] | None = None
    max_geodesics_per_pair: int = 64
    geodesic_samples: int = 6
    max_triangles_per_triple: int = 64


@dataclass
class DeltaReport:
    delta: int
    witness: dict
    triples_examined: int
    triples_uncertified: int
    triangles_examined: int
    seed: int


def delta_estimate(cx: Complex2, config: DeltaScanConfig | None = None) -> DeltaReport:
    """Lower bound for the thin-triangles constant over sampled triangles.

    Only triples whose three pairwise distances are certified exact
    contribute.  All geodesics per side are enumerated when the pair's
    geodesic count stays within the configured cap, otherwise a seeded
    sample is used, so the estimate is explicitly a lower bound.
    """
    cfg = config or DeltaScanConfig()
    rng = random.Random(cfg.seed)
    pool = list(cfg.vertex_pool) if cfg.vertex_pool is not None else list(range(len(cx.vertices)))
    if len(pool) < 3:
        raise MetricError("need at least three vertices to sample")

    if cfg.exhaustive:
        from itertools import combinations
        triples = list(combinations(sorted(pool), 3))
    else:
        triples = []
        seen = set()
        attempts = 0
        while len(triples) < cfg.n_triples and attempts < cfg.n_triples * 20:
            attempts += 1
            t = tuple(sorted(rng.sample(pool, 3)))
            if t not in seen:
                seen.add(t)
                triples.append(t)

    cache = DistanceCache(cx)
    best = 0
    witness: dict = {}
    uncertified = 0
    triangles = 0
    for (x1, x2, x3) in triples:
        tables = {x: cache.table(x) for x in (x1, x2, x3)}
        ok = True
        for (p, q) in ((x1, x2), (x1, x3), (x2, x3)):
            d = tables[p][q]
            if d < 0 or not _exactness(cx, tables[p], d):
                ok = False
                break
        if not ok:
            uncertified += 1
            continue
        side_geos = []
        for (p, q) in ((x2, x3), (x1, x3), (x1, x2)):
            geos = enumerate_geodesics(cx, p, q, tables[p], cfg.max_geodesics_per_pair)
            if geos is None:
                geos = sample_geodesics(cx, p, q, tables[p], cfg.geodesic_samples, rng)
            side_geos.append(geos)
        combos = []
        total = len(side_geos[0]) * len(side_geos[1]) * len(side_geos[2])
        if total <= cfg.max_triangles_per_triple:
            for g1 in side_geos[0]:
                for g2 in side_geos[1]:
                    for g3 in side_geos[2]:
                        combos.append((g1, g2, g3))
        else:
            for _ in range(cfg.max_triangles_per_triple):
                combos.append((rng.choice(side_geos[0]), rng.choice(side_geos[1]),
                               rng.choice(side_geos[2])))
        for sides in combos:
            tri = internal_points(cx, (x1, x2, x3), sides)
            triangles += 1
            value, w = triangle_thinness(cache, tri)
            if value > best:
                best = value
                witness = {"corners": [x1, x2, x3], **w}
    return DeltaReport(best, witness, len(triples), uncertified, triangles, cfg.seed)


# -----------------------------------------------------------------------
# m-horoball convexity checking


@dataclass
class ConvexityEntry:
    u: int
    v: int
    status: str               # "pass" | "violation" | "uncertified"
    witness: int | None = None


@dataclass
class ConvexityReport:
    m: int
    entries: list[ConvexityEntry]
    seed: int

    @property
    def certified_violations(self) -> list[ConvexityEntry]:
        return [e for e in self.entries if e.status == "violation"]

    @property
    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out[e.status] = out.get(e.status, 0) + 1
        return out


def convexity_check(cusped, m: int, n_pairs: int = 200, seed: int = 0) -> ConvexityReport:
    """Sample vertex pairs inside depth >= m parts of single horoballs and
    flag any geodesic that leaves that part.

    A pair passes when every vertex on every geodesic between them stays
    in the same horoball at depth >= m.  Pairs whose distance cannot be
    certified exact are reported uncertified, not failed.  At m = 0 the
    check is vacuous.
    """
    if m < 0:
        raise MetricError("m must be >= 0")
    rng = random.Random(seed)
    entries: list[ConvexityEntry] = []
    if m == 0:
        return ConvexityReport(0, entries, seed)
    X = cusped.X
    candidates: list[tuple[int, list[int]]] = []
    for h in cusped.horoballs:
        deep = [vid for vid in h.vertex_ids() if h.level(vid) >= m]
        if len(deep) >= 2:
            candidates.append((h.coset, deep))
    if not candidates:
        return ConvexityReport(m, entries, seed)
    for _ in range(n_pairs):
        coset, deep = candidates[rng.randrange(len(candidates))]
        u, v = rng.sample(deep, 2)
        h = cusped.horoballs[coset]
        dist_u = bfs_distances(X, u)
        d = dist_u[v]
        if d < 0 or not _exactness(X, dist_u, d):
            entries.append(ConvexityEntry(u, v, "uncertified"))
            continue
        dist_v = bfs_distances(X, v)
        bad = None
        for w in geodesic_dag_vertices(dist_u, dist_v, d):
            if not h.contains(w) or h.level(w) < m:
                bad = w
                break
        if bad is None:
            entries.append(ConvexityEntry(u, v, "pass"))
        else:
            entries.append(ConvexityEntry(u, v, "violation", witness=bad))
    return ConvexityReport(m, entries, seed)
