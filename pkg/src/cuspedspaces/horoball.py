"""Combinatorial horoballs over finite base graphs, truncated at a depth cap.

Over a graph G the horoball has vertex set G x {0..depth_cap}, horizontal
edges at level k joining vertices at base distance 0 < d <= 2^k (level 0
keeps exactly the edges of G), vertical edges (v,k)-(v,k+1), and three
face families: horizontal triangles, vertical squares, and vertical
pentagons whose boundary does not already bound a square plus triangle.
That exclusion leaves exactly the pentagons with two horizontal edges at
the lower level, one at the upper level, and no chord across the lower
pair.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

from .complex2 import (
    CAYLEY_EDGE,
    HORIZONTAL_B1,
    HORIZONTAL_B2,
    HORIZONTAL_TRIANGLE,
    HORO,
    VERTICAL_B3,
    VERTICAL_PENTAGON,
    VERTICAL_SQUARE,
    Complex2,
    Complex2Builder,
    ComplexError,
)


class HoroballError(ValueError):
    pass


def _all_pairs_bfs(n: int, adjacency: list[list[int]]) -> list[list[int]]:
    INF = -1
    table = []
    for s in range(n):
        dist = [INF] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for y in adjacency[x]:
                if dist[y] == INF:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        table.append(dist)
    return table


class Horoball:
    """A horoball living inside an ambient complex.

    ``base`` holds the ambient ids of the level-0 vertices; levels above
    are indexed by (base position, level).  Lookup tables locate the
    horizontal and vertical edges and the square, pentagon and triangle
    faces that the homotopy moves cross.
    """

    def __init__(self, complex2: Complex2, base: Sequence[int], depth_cap: int,
                 dist: list[list[int]], vertex_grid: list[list[int]],
                 coset: int | None, tainted: bool):
        self.complex = complex2
        self.base = tuple(base)
        self.depth_cap = depth_cap
        self.dist = dist
        self._grid = vertex_grid          # [level][base position] -> ambient vid
        self.coset = coset
        self.tainted = tainted
        self._local: dict[int, tuple[int, int]] = {}
        for k, row in enumerate(vertex_grid):
            for i, vid in enumerate(row):
                self._local[vid] = (i, k)
        n = len(base)
        self._base_adjacency: list[list[int]] = [[] for _ in range(n)]
        for i in range(n):
            ds = dist[i]
            self._base_adjacency[i] = [j for j in range(n) if ds[j] == 1]

    # -- coordinates ----------------------------------------------------

    def vertex_at(self, i: int, k: int) -> int:
        return self._grid[k][i]

    def contains(self, vid: int) -> bool:
        return vid in self._local

    def local(self, vid: int) -> tuple[int, int]:
        try:
            return self._local[vid]
        except KeyError:
            raise HoroballError(f"vertex {vid} is not in this horoball") from None

    def level(self, vid: int) -> int:
        return self.local(vid)[1]

    def base_index(self, vid: int) -> int:
        return self.local(vid)[0]

    def vertex_ids(self) -> list[int]:
        return [vid for row in self._grid for vid in row]

    @property
    def n_base(self) -> int:
        return len(self.base)

    # -- structure lookups -----------------------------------------------

    def base_distance(self, i: int, j: int) -> int:
        d = self.dist[i][j]
        if d < 0:
            raise HoroballError("base graph is disconnected across the truncation")
        return d

    def horizontal_edge(self, i: int, j: int, k: int) -> int | None:
        """Edge id between (i,k) and (j,k), or None."""
        if i == j:
            return None
        d = self.dist[i][j]
        if d <= 0:
            return None
        if k == 0:
            if d != 1:
                return None
        elif d > (1 << k):
            return None
        ids = self.complex.edges_between(self.vertex_at(i, k), self.vertex_at(j, k))
        for eid in ids:
            if self.complex.edges[eid].kind[0] in (CAYLEY_EDGE, HORIZONTAL_B1, HORIZONTAL_B2):
                return eid
        return None

    def vertical_edge(self, i: int, k: int) -> int | None:
        """Edge id between (i,k) and (i,k+1), or None."""
        if k + 1 > self.depth_cap:
            return None
        ids = self.complex.edges_between(self.vertex_at(i, k), self.vertex_at(i, k + 1))
        for eid in ids:
            if self.complex.edges[eid].kind[0] == VERTICAL_B3:
                return eid
        return None

    def square_face(self, i: int, j: int, k: int) -> int | None:
        """Vertical square over the pair {i,j} between levels k and k+1."""
        lo = self.horizontal_edge(i, j, k)
        hi = self.horizontal_edge(i, j, k + 1) if k + 1 <= self.depth_cap else None
        vi = self.vertical_edge(i, k)
        vj = self.vertical_edge(j, k)
        if None in (lo, hi, vi, vj):
            return None
        for fid in self.complex.faces_with_edges([lo, hi, vi, vj]):
            if self.complex.faces[fid].kind[0] == VERTICAL_SQUARE:
                return fid
        return None

    def pentagon_face(self, i: int, mid: int, j: int, k: int) -> int | None:
        """Pentagon with lower path (i,k)-(mid,k)-(j,k) and upper edge (i,j,k+1)."""
        e1 = self.horizontal_edge(i, mid, k)
        e2 = self.horizontal_edge(mid, j, k)
        top = self.horizontal_edge(i, j, k + 1) if k + 1 <= self.depth_cap else None
        vi = self.vertical_edge(i, k)
        vj = self.vertical_edge(j, k)
        if None in (e1, e2, top, vi, vj):
            return None
        for fid in self.complex.faces_with_edges([e1, e2, top, vi, vj]):
            if self.complex.faces[fid].kind[0] == VERTICAL_PENTAGON:
                return fid
        return None

    def triangle_face(self, i: int, j: int, l: int, k: int) -> int | None:
        es = [self.horizontal_edge(i, j, k), self.horizontal_edge(j, l, k),
              self.horizontal_edge(i, l, k)]
        if None in es:
            return None
        for fid in self.complex.faces_with_edges(es):
            if self.complex.faces[fid].kind[0] == HORIZONTAL_TRIANGLE:
                return fid
        return None

    def base_geodesic(self, i: int, j: int) -> list[int]:
        """Deterministic base-graph geodesic as local indices, i to j."""
        n = self.n_base
        dist = [-1] * n
        dist[j] = 0
        queue = deque([j])
        while queue:
            x = queue.popleft()
            for y in self._base_adjacency[x]:
                if dist[y] == -1:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        if dist[i] == -1:
            raise HoroballError("base graph is disconnected across the truncation")
        path = [i]
        cur = i
        while cur != j:
            cur = min(y for y in self._base_adjacency[cur] if dist[y] == dist[cur] - 1)
            path.append(cur)
        return path

    # -- slices ----------------------------------------------------------

    def depth(self, vid: int) -> int:
        return self.level(vid)

    def slice(self, m: int) -> Complex2:
        self._check_level(m)
        return self.complex.full_subcomplex(self._grid[m])[0]

    def below(self, m: int) -> Complex2:
        self._check_level(m)
        ids = [vid for k in range(0, m + 1) for vid in self._grid[k]]
        return self.complex.full_subcomplex(ids)[0]

    def above(self, m: int) -> Complex2:
        self._check_level(m)
        ids = [vid for k in range(m, self.depth_cap + 1) for vid in self._grid[k]]
        return self.complex.full_subcomplex(ids)[0]

    def _check_level(self, m: int) -> None:
        if not 0 <= m <= self.depth_cap:
            raise HoroballError(f"level {m} outside 0..{self.depth_cap}")


def graft_horoball(
    builder: Complex2Builder,
    base_vertex_ids: Sequence[int],
    base_edges: Iterable[tuple[int, int]],
    depth_cap: int,
    coset: int | None = None,
    base_frontier: Sequence[bool] | None = None,
    labels: Sequence[str] | None = None,
    words: Sequence[tuple[int, ...]] | None = None,
    horizontal0_kind: tuple | None = None,
) -> tuple[Complex2Builder, list[list[int]], list[list[int]], bool]:
    """Add the cells of a horoball over an existing level-0 graph.

    ``base_vertex_ids`` are builder vertex ids; edges are pairs of local
    positions into that list and must already exist in the builder unless
    ``horizontal0_kind`` asks for them to be created.  Returns the grid of
    vertex ids per level, the base distance table, and the taint flag.
    """
    base = list(base_vertex_ids)
    n = len(base)
    edges = sorted({(min(i, j), max(i, j)) for i, j in base_edges if i != j})
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    dist = _all_pairs_bfs(n, adjacency)
    if n and any(dist[0][j] < 0 for j in range(n)):
        raise HoroballError("base graph must be connected")
    if depth_cap < 0:
        raise HoroballError("depth cap must be >= 0")

    tainted = bool(base_frontier and any(base_frontier))
    deep_frontier = tainted

    if horizontal0_kind is not None:
        for i, j in edges:
            builder.ensure_edge(base[i], base[j], horizontal0_kind)

    grid: list[list[int]] = [base]
    for k in range(1, depth_cap + 1):
        row = []
        for i in range(n):
            frontier = deep_frontier or k == depth_cap
            label = (labels[i] if labels else f"v{i}") + f"@{k}"
            row.append(builder.add_vertex(
                kind=HORO, frontier=frontier, label=label, coset=coset,
                depth=k, base=base[i],
                word=(words[i] if words is not None else None),
            ))
        grid.append(row)

    # horizontal edge ids per level for face assembly
    def level_pairs(k: int) -> list[tuple[int, int]]:
        if k == 0:
            return edges
        cap = 1 << k
        return [(i, j) for i in range(n) for j in range(i + 1, n) if 0 < dist[i][j] <= cap]

    hedges: list[dict[tuple[int, int], int]] = []
    for k in range(depth_cap + 1):
        table = {}
        for i, j in level_pairs(k):
            if k == 0:
                eid = builder.find_edge(base[i], base[j])
                if eid is None:
                    raise HoroballError(f"missing level-0 edge between positions {i},{j}")
            else:
                eid = builder.add_edge(grid[k][i], grid[k][j], (HORIZONTAL_B2, k))
            table[(i, j)] = eid
        hedges.append(table)

    vedges: list[dict[int, int]] = []
    for k in range(depth_cap):
        table = {}
        for i in range(n):
            table[i] = builder.add_edge(grid[k][i], grid[k + 1][i], (VERTICAL_B3,))
        vedges.append(table)

    # faces: C1 triangles
    for k in range(depth_cap + 1):
        table = hedges[k]
        for i in range(n):
            for j in range(i + 1, n):
                if (i, j) not in table:
                    continue
                for l in range(j + 1, n):
                    if (j, l) in table and (i, l) in table:
                        builder.add_face(
                            [table[(i, j)], table[(j, l)], table[(i, l)]],
                            (HORIZONTAL_TRIANGLE, k),
                        )
    # C2 squares
    for k in range(depth_cap):
        lo, hi = hedges[k], hedges[k + 1]
        for (i, j), eid in lo.items():
            if (i, j) in hi:
                builder.add_face(
                    [eid, vedges[k][j], hi[(i, j)], vedges[k][i]],
                    (VERTICAL_SQUARE, k),
                )
    # C3 pentagons, minus the square-plus-triangle boundaries: keep only
    # lower paths i-mid-j whose endpoints have no chord at the lower level
    for k in range(depth_cap):
        lo, hi = hedges[k], hedges[k + 1]
        for mid in range(n):
            nbrs = sorted({x for (a, b) in lo for x in (a, b) if mid in (a, b)} - {mid})
            for ii in range(len(nbrs)):
                for jj in range(ii + 1, len(nbrs)):
                    i, j = nbrs[ii], nbrs[jj]
                    if (min(i, j), max(i, j)) in lo:
                        continue  # chord exists: boundary = square + triangle
                    top = hi.get((min(i, j), max(i, j)))
                    if top is None:
                        continue  # cannot happen for connected bases, kept defensive
                    e1 = lo[(min(i, mid), max(i, mid))]
                    e2 = lo[(min(mid, j), max(mid, j))]
                    builder.add_face(
                        [e1, e2, vedges[k][j], top, vedges[k][i]],
                        (VERTICAL_PENTAGON, k),
                    )
    return builder, grid, dist, tainted


def build_horoball(
    n_vertices: int,
    edges: Iterable[tuple[int, int]],
    depth_cap: int,
    labels: Sequence[str] | None = None,
) -> Horoball:
    """Standalone horoball over a connected finite graph."""
    if n_vertices <= 0:
        raise HoroballError("base graph needs at least one vertex")
    builder = Complex2Builder()
    names = list(labels) if labels else [f"v{i}" for i in range(n_vertices)]
    base_ids = [
        builder.add_vertex(kind=HORO, label=names[i], coset=0, depth=0)
        for i in range(n_vertices)
    ]
    builder, grid, dist, tainted = graft_horoball(
        builder, base_ids, edges, depth_cap, coset=0,
        labels=names, horizontal0_kind=(HORIZONTAL_B1,),
    )
    for vid in base_ids:
        builder._vertices[vid].base = vid
    cx = builder.finish()
    return Horoball(cx, base_ids, depth_cap, dist, grid, coset=0, tainted=tainted)


def depth(h: Horoball, vid: int) -> int:
    """Depth function: 0 on the base graph, k at (v, k)."""
    return h.level(vid)


def line_graph(n: int) -> tuple[int, list[tuple[int, int]]]:
    """Path graph on n vertices, the standard test base."""
    return n, [(i, i + 1) for i in range(n - 1)]
