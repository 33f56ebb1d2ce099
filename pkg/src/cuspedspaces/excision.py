"""Disk-pair excision on colored simplicial strip maps.

A strip is a rectangle [0,N] x [0,H] with the uniform diagonal
triangulation; a strip map sends it simplicially into a cusped complex
with the two horizontal boundary rows landing in the Cayley part Y.  For
each peripheral coset the three-color scheme marks the coset's level-0
complex blue, everything separated from Y by it (the deep horoball part)
red, and the rest green.  Red triangles fall into classes joined by
shared red edges; each class is excised by a disk pair (E, alpha): an
open disk of strip cells bounded by an embedded all-blue cycle.  Two
independent constructions are provided, the literal boundary-growing
induction and a region-growing complement method, and the excision
selects one pair per class, ordered by first column, dropping nested
pairs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cusped import CuspedComplex
from .metric import bfs_distances

BLUE = "blue"
RED = "red"
GREEN = "green"


class ExcisionError(ValueError):
    pass


# -----------------------------------------------------------------------
# Strips

VertexKey = tuple[int, int]
EdgeKey = tuple[str, int, int]          # ("h"|"v"|"d", i, j)
TriKey = tuple[str, int, int]           # ("L"|"U", i, j)


@dataclass(frozen=True)
class Strip:
    """[0, width] x [0, height] with squares split along up-right diagonals."""

    width: int
    height: int = 1

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ExcisionError("strip needs width >= 1 and height >= 1")

    def vertices(self) -> list[VertexKey]:
        return [(i, j) for i in range(self.width + 1) for j in range(self.height + 1)]

    def triangles(self) -> list[TriKey]:
        return [
            (t, i, j)
            for j in range(self.height)
            for i in range(self.width)
            for t in ("L", "U")
        ]

    def triangle_vertices(self, tri: TriKey) -> tuple[VertexKey, VertexKey, VertexKey]:
        t, i, j = tri
        if t == "L":
            return ((i, j), (i + 1, j), (i + 1, j + 1))
        return ((i, j), (i + 1, j + 1), (i, j + 1))

    def triangle_edges(self, tri: TriKey) -> tuple[EdgeKey, EdgeKey, EdgeKey]:
        t, i, j = tri
        if t == "L":
            return (("h", i, j), ("v", i + 1, j), ("d", i, j))
        return (("d", i, j), ("h", i, j + 1), ("v", i, j))

    def edge_vertices(self, edge: EdgeKey) -> tuple[VertexKey, VertexKey]:
        t, i, j = edge
        if t == "h":
            return ((i, j), (i + 1, j))
        if t == "v":
            return ((i, j), (i, j + 1))
        return ((i, j), (i + 1, j + 1))

    def edges(self) -> list[EdgeKey]:
        out: list[EdgeKey] = []
        for j in range(self.height + 1):
            for i in range(self.width):
                out.append(("h", i, j))
        for j in range(self.height):
            for i in range(self.width + 1):
                out.append(("v", i, j))
            for i in range(self.width):
                out.append(("d", i, j))
        return out

    def edge_triangles(self, edge: EdgeKey) -> list[TriKey]:
        t, i, j = edge
        out = []
        if t == "h":
            if j < self.height:
                out.append(("L", i, j))
            if j > 0:
                out.append(("U", i, j - 1))
        elif t == "v":
            if i > 0:
                out.append(("L", i - 1, j))
            if i <= self.width - 1:
                out.append(("U", i, j))
        else:
            out.append(("L", i, j))
            out.append(("U", i, j))
        return [tr for tr in out if 0 <= tr[1] < self.width and 0 <= tr[2] < self.height]

    def vertex_triangles(self, v: VertexKey) -> list[TriKey]:
        i, j = v
        candidates = [
            ("L", i, j), ("U", i, j),
            ("L", i - 1, j), ("U", i - 1, j - 1),
            ("L", i - 1, j - 1), ("U", i, j - 1),
            ("L", i, j - 1), ("U", i - 1, j),
        ]
        out = []
        for tr in candidates:
            if 0 <= tr[1] < self.width and 0 <= tr[2] < self.height:
                if v in self.triangle_vertices(tr):
                    out.append(tr)
        return sorted(set(out))

    def on_boundary_rows(self, v: VertexKey) -> bool:
        return v[1] in (0, self.height)

    def on_vertical_ends(self, v: VertexKey) -> bool:
        return v[0] in (0, self.width)


# -----------------------------------------------------------------------
# Strip maps


@dataclass
class StripMap:
    strip: Strip
    target: CuspedComplex
    vertex_map: dict[VertexKey, int]

    def image(self, v: VertexKey) -> int:
        return self.vertex_map[v]

    def validate(self) -> list[str]:
        """Simpliciality, boundary rows into Y, and image cell existence."""
        issues = []
        strip, X = self.strip, self.target.X
        for v in strip.vertices():
            if v not in self.vertex_map:
                issues.append(f"vertex {v} has no image")
        if issues:
            return issues
        for edge in strip.edges():
            a, b = strip.edge_vertices(edge)
            ia, ib = self.vertex_map[a], self.vertex_map[b]
            if ia != ib and not X.edges_between(ia, ib):
                issues.append(f"edge {edge} maps to non-adjacent vertices {ia},{ib}")
        triangle_faces = {
            frozenset(f.vertices) for f in X.faces if len(set(f.vertices)) == 3
        }
        for tri in strip.triangles():
            imgs = {self.vertex_map[v] for v in strip.triangle_vertices(tri)}
            if len(imgs) == 3 and frozenset(imgs) not in triangle_faces:
                issues.append(f"triangle {tri} maps onto {sorted(imgs)} with no triangle face")
        for v in strip.vertices():
            if strip.on_boundary_rows(v) and self.target.depth[self.vertex_map[v]] != 0:
                issues.append(f"boundary-row vertex {v} maps out of Y")
        return issues


# -----------------------------------------------------------------------
# Colorings


@dataclass
class Coloring:
    coset_index: int
    vertex_color: dict[VertexKey, str]

    def edge_color(self, strip: Strip, edge: EdgeKey) -> str:
        a, b = strip.edge_vertices(edge)
        return _simplex_color((self.vertex_color[a], self.vertex_color[b]))

    def triangle_color(self, strip: Strip, tri: TriKey) -> str:
        cols = tuple(self.vertex_color[v] for v in strip.triangle_vertices(tri))
        return _simplex_color(cols)


def _simplex_color(cols: tuple[str, ...]) -> str:
    if any(c == RED for c in cols):
        return RED
    if all(c == BLUE for c in cols):
        return BLUE
    return GREEN


def color(strip_map: StripMap, coset_index: int) -> Coloring:
    """Structural three-coloring of the strip for one peripheral coset.

    Blue pulls back the coset's level-0 subcomplex, red the deep part of
    its horoball (exactly what that subcomplex separates from Y), green
    the rest.  The coloring observations are validated: a red vertex is
    never adjacent to a green one, an edge or triangle is blue iff all
    its vertices are, and red iff some vertex is.
    """
    cusped = strip_map.target
    coset = cusped.cosets[coset_index]
    members = set(coset.members)
    vc: dict[VertexKey, str] = {}
    for v in strip_map.strip.vertices():
        img = strip_map.vertex_map[v]
        data = cusped.X.vertices[img]
        if img in members:
            vc[v] = BLUE
        elif data.coset == coset_index and data.depth >= 1:
            vc[v] = RED
        else:
            vc[v] = GREEN
    coloring = Coloring(coset_index, vc)
    problems = validate_observations(strip_map.strip, coloring)
    if problems:
        raise ExcisionError("; ".join(problems))
    return coloring


def validate_observations(strip: Strip, coloring: Coloring) -> list[str]:
    """The two structural facts every valid coloring satisfies."""
    issues = []
    vc = coloring.vertex_color
    for edge in strip.edges():
        a, b = strip.edge_vertices(edge)
        pair = {vc[a], vc[b]}
        if pair == {RED, GREEN}:
            issues.append(f"red-green edge {edge}: a red vertex touches Y off the coset")
        ec = coloring.edge_color(strip, edge)
        if (ec == BLUE) != (vc[a] == BLUE and vc[b] == BLUE):
            issues.append(f"edge {edge} blueness inconsistent")
        if (ec == RED) != (RED in pair):
            issues.append(f"edge {edge} redness inconsistent")
    for tri in strip.triangles():
        cols = [vc[v] for v in strip.triangle_vertices(tri)]
        tc = coloring.triangle_color(strip, tri)
        if (tc == BLUE) != all(c == BLUE for c in cols):
            issues.append(f"triangle {tri} blueness inconsistent")
        if (tc == RED) != any(c == RED for c in cols):
            issues.append(f"triangle {tri} redness inconsistent")
        if cols.count(RED) == 1:
            # the edge opposite the unique red vertex must be blue
            red_v = [v for v in strip.triangle_vertices(tri) if vc[v] == RED][0]
            opposite = [e for e in strip.triangle_edges(tri)
                        if red_v not in strip.edge_vertices(e)][0]
            if coloring.edge_color(strip, opposite) != BLUE:
                issues.append(f"triangle {tri}: edge opposite its red vertex is not blue")
    return issues


def separation_oracle(cusped: CuspedComplex, v: int, blocking: Iterable[int]) -> tuple[bool, bool]:
    """(separated, certified): does every path from v to Y pass the blocker?

    BFS from v avoiding the blocking vertices.  Reaching any Y vertex
    certifies non-separation; exhausting the search certifies separation
    only when no frontier vertex was explored.
    """
    block = set(blocking)
    if v in block:
        raise ExcisionError("query vertex lies in the blocking set")
    X = cusped.X
    seen = {v}
    queue = [v]
    touched_frontier = X.vertices[v].frontier
    while queue:
        nxt: list[int] = []
        for x in queue:
            for y in X.neighbors[x]:
                if y in block or y in seen:
                    continue
                if cusped.depth[y] == 0:
                    return False, True
                seen.add(y)
                if X.vertices[y].frontier:
                    touched_frontier = True
                nxt.append(y)
        queue = nxt
    return True, not touched_frontier


# -----------------------------------------------------------------------
# Red classes


def red_classes(strip_map: StripMap, coloring: Coloring) -> list[frozenset[TriKey]]:
    """Partition the red triangles by the share-a-red-edge relation."""
    strip = strip_map.strip
    reds = [t for t in strip.triangles() if coloring.triangle_color(strip, t) == RED]
    index = {t: n for n, t in enumerate(reds)}
    parent = list(range(len(reds)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in reds:
        for e in strip.triangle_edges(t):
            if coloring.edge_color(strip, e) != RED:
                continue
            for t2 in strip.edge_triangles(e):
                if t2 in index and t2 != t:
                    ra, rb = find(index[t]), find(index[t2])
                    if ra != rb:
                        parent[ra] = rb
    groups: dict[int, set[TriKey]] = {}
    for t in reds:
        groups.setdefault(find(index[t]), set()).add(t)
    return sorted((frozenset(g) for g in groups.values()), key=lambda g: sorted(g)[0])


# -----------------------------------------------------------------------
# Disk pairs


@dataclass
class DiskPair:
    coset_index: int
    triangles: frozenset[TriKey]
    inner_edges: frozenset[EdgeKey]
    inner_vertices: frozenset[VertexKey]
    boundary_vertices: tuple[VertexKey, ...]     # closed cycle, canonical orientation
    boundary_edges: tuple[EdgeKey, ...]
    truncated: bool = False

    @property
    def cells(self) -> frozenset:
        return self.triangles | self.inner_edges | self.inner_vertices

    def contains(self, other: "DiskPair") -> bool:
        return other.triangles <= self.triangles

    def leftmost(self) -> int:
        return min(v[0] for t in self.triangles for v in _tri_vertices_static(t))


def _tri_vertices_static(tri: TriKey) -> tuple[VertexKey, ...]:
    t, i, j = tri
    if t == "L":
        return ((i, j), (i + 1, j), (i + 1, j + 1))
    return ((i, j), (i + 1, j + 1), (i, j + 1))


def _canonical_cycle(cycle: list[VertexKey]) -> tuple[VertexKey, ...]:
    """Rotate and orient a closed cycle to a deterministic representative."""
    if cycle[0] == cycle[-1]:
        cycle = cycle[:-1]
    n = len(cycle)
    best = None
    for seq in (cycle, list(reversed(cycle))):
        for r in range(n):
            rot = tuple(seq[r:] + seq[:r])
            if best is None or rot < best:
                best = rot
    assert best is not None
    return best + (best[0],)


def _boundary_cycle(strip: Strip, tris: set[TriKey]) -> tuple[tuple[VertexKey, ...], tuple[EdgeKey, ...]]:
    """Trace the single boundary cycle of a disk-like triangle set."""
    boundary_edges: set[EdgeKey] = set()
    for t in tris:
        for e in strip.triangle_edges(t):
            inside = [t2 for t2 in strip.edge_triangles(e) if t2 in tris]
            if len(inside) == 1:
                boundary_edges.add(e)
    if not boundary_edges:
        raise ExcisionError("region has no boundary")
    incident: dict[VertexKey, list[EdgeKey]] = {}
    for e in boundary_edges:
        for v in strip.edge_vertices(e):
            incident.setdefault(v, []).append(e)
    if any(len(es) != 2 for es in incident.values()):
        raise ExcisionError("region boundary is not an embedded cycle")
    start = min(incident)
    cycle_v = [start]
    cycle_e: list[EdgeKey] = []
    prev_e: EdgeKey | None = None
    cur = start
    while True:
        options = [e for e in sorted(incident[cur]) if e != prev_e]
        e = options[0]
        cycle_e.append(e)
        a, b = strip.edge_vertices(e)
        cur = b if a == cur else a
        cycle_v.append(cur)
        prev_e = e
        if cur == start:
            break
    if len(cycle_e) != len(boundary_edges):
        raise ExcisionError("region boundary splits into several cycles")
    canon = _canonical_cycle(cycle_v)
    edge_cycle = tuple(
        _edge_between_keys(strip, canon[i], canon[i + 1]) for i in range(len(canon) - 1)
    )
    return canon, edge_cycle


def _edge_between_keys(strip: Strip, a: VertexKey, b: VertexKey) -> EdgeKey:
    (i1, j1), (i2, j2) = sorted((a, b))
    if j1 == j2:
        return ("h", i1, j1)
    if i1 == i2:
        return ("v", i1, j1)
    return ("d", i1, j1)


def _fill_from(strip: Strip, seed: Iterable[TriKey], boundary: set[EdgeKey]) -> set[TriKey]:
    """Flood across edges not in ``boundary`` starting from the seed."""
    out = set(seed)
    queue = list(out)
    while queue:
        t = queue.pop()
        for e in strip.triangle_edges(t):
            if e in boundary:
                continue
            for t2 in strip.edge_triangles(e):
                if t2 not in out:
                    out.add(t2)
                    queue.append(t2)
    return out


def _pair_from_triangles(strip: Strip, coset_index: int, tris: set[TriKey],
                         truncated: bool) -> DiskPair:
    cycle_v, cycle_e = _boundary_cycle(strip, tris)
    boundary_edge_set = set(cycle_e)
    boundary_vertex_set = set(cycle_v)
    inner_edges = set()
    inner_vertices = set()
    for t in tris:
        for e in strip.triangle_edges(t):
            if e not in boundary_edge_set:
                inner_edges.add(e)
        for v in strip.triangle_vertices(t):
            if v not in boundary_vertex_set:
                inner_vertices.add(v)
    pair = DiskPair(coset_index, frozenset(tris), frozenset(inner_edges),
                    frozenset(inner_vertices), cycle_v, cycle_e, truncated)
    # disk check: Euler characteristic of the closed region is 1
    V = len(inner_vertices) + len(boundary_vertex_set)
    E = len(inner_edges) + len(boundary_edge_set)
    F = len(tris)
    if V - E + F != 1:
        raise ExcisionError(f"region is not a disk (chi = {V - E + F})")
    return pair


def _class_is_truncated(strip: Strip, cls: frozenset[TriKey]) -> bool:
    return any(v[0] in (0, strip.width) for t in cls for v in strip.triangle_vertices(t))


def full_interior_pair(strip: Strip, coset_index: int) -> DiskPair:
    """The trivial excision when no green boundary vertex exists."""
    return _pair_from_triangles(strip, coset_index, set(strip.triangles()), False)


def _green_anchor(strip: Strip, coloring: Coloring) -> VertexKey | None:
    for j in (0, strip.height):
        for i in range(strip.width + 1):
            if coloring.vertex_color[(i, j)] == GREEN:
                return (i, j)
    return None


def disk_pair_region_grow(strip_map: StripMap, coloring: Coloring,
                          cls: frozenset[TriKey]) -> DiskPair:
    """Independent construction: fill the complement component that touches
    the boundary rows and take everything else.

    The degenerate all-blue-rows case has no outside to grow from, so it
    returns the full interior exactly as the inductive construction does.
    """
    strip = strip_map.strip
    if _green_anchor(strip, coloring) is None:
        return full_interior_pair(strip, coloring.coset_index)
    truncated = _class_is_truncated(strip, cls)
    non_class = [t for t in strip.triangles() if t not in cls]
    outer_seed = [
        t for t in non_class
        if any(v[1] in (0, strip.height) for v in strip.triangle_vertices(t))
    ]
    outer = set()
    queue = [t for t in outer_seed]
    outer.update(queue)
    while queue:
        t = queue.pop()
        for e in strip.triangle_edges(t):
            for t2 in strip.edge_triangles(e):
                if t2 not in outer and t2 not in cls:
                    outer.add(t2)
                    queue.append(t2)
    region = {t for t in strip.triangles() if t not in outer}
    return _pair_from_triangles(strip, coloring.coset_index, region, truncated)


def disk_pair_induction(strip_map: StripMap, coloring: Coloring,
                        cls: frozenset[TriKey]) -> DiskPair:
    """The literal boundary-growing construction.

    Starting from the star of the red vertex of the first class triangle
    reached from a green boundary vertex, the boundary cycle absorbs
    class triangles one at a time: replacing the shared edge by the two
    others when the opposite vertex is new (case 1), cutting a corner
    when one neighboring boundary edge lies on the triangle (case 2), and
    discarding the side of the boundary not holding the entry edge when
    the opposite vertex already lies on the cycle (case 3).  Classes that
    touch the strip's vertical ends fall back to the region-growing
    construction and are flagged truncated.
    """
    strip = strip_map.strip
    if _class_is_truncated(strip, cls):
        return disk_pair_region_grow(strip_map, coloring, cls)
    g = _green_anchor(strip, coloring)
    if g is None:
        return full_interior_pair(strip, coloring.coset_index)

    # breadth-first triangle path from the anchor to the class
    start_tris = sorted(strip.vertex_triangles(g))
    prev: dict[TriKey, TriKey | None] = {t: None for t in start_tris}
    queue = list(start_tris)
    hit = None
    while queue:
        nxt = []
        for t in queue:
            if t in cls:
                hit = t
                break
            for e in strip.triangle_edges(t):
                for t2 in strip.edge_triangles(e):
                    if t2 not in prev:
                        prev[t2] = t
                        nxt.append(t2)
        if hit is not None:
            break
        queue = sorted(nxt)
    if hit is None:
        raise ExcisionError("class unreachable from the green anchor")
    before = prev[hit]
    if before is None:
        raise ExcisionError("class triangle contains the green anchor")
    shared = [e for e in strip.triangle_edges(hit) if e in strip.triangle_edges(before)]
    e_entry = shared[0]
    if coloring.edge_color(strip, e_entry) != BLUE:
        raise ExcisionError("entry edge into the class is not blue")
    red_v = [v for v in strip.triangle_vertices(hit)
             if v not in strip.edge_vertices(e_entry)][0]
    if coloring.vertex_color[red_v] != RED:
        raise ExcisionError("vertex opposite the entry edge is not red")

    star = set(strip.vertex_triangles(red_v))
    if not star <= cls:
        raise ExcisionError("star of the seeding red vertex leaves the class")
    alpha, _ = _boundary_cycle(strip, star)
    alpha_list = list(alpha[:-1])
    region = set(star)

    guard = 0
    while True:
        guard += 1
        if guard > 10 * len(strip.triangles()) + 100:
            raise ExcisionError("induction failed to terminate")
        n = len(alpha_list)
        edge_at = lambda t: _edge_between_keys(strip, alpha_list[t], alpha_list[(t + 1) % n])
        entry_pos = None
        for t in range(n):
            if edge_at(t) == e_entry:
                entry_pos = t
                break
        if entry_pos is None:
            raise ExcisionError("entry edge fell off the boundary")
        target = None
        for off in range(n):
            t = (entry_pos + 1 + off) % n
            e = edge_at(t)
            outside = [tr for tr in strip.edge_triangles(e) if tr not in region]
            cand = [tr for tr in outside if tr in cls]
            if cand:
                target = (t, e, cand[0])
                break
        if target is None:
            break
        t_pos, b_edge, tri = target
        tri_vs = set(strip.triangle_vertices(tri))
        b_vs = set(strip.edge_vertices(b_edge))
        (w_prime,) = tuple(tri_vs - b_vs)
        p = alpha_list[t_pos]
        q = alpha_list[(t_pos + 1) % n]
        if w_prime not in alpha_list:
            # case 1: bulge out across the triangle
            alpha_list.insert(t_pos + 1, w_prime)
            region.add(tri)
        else:
            o = alpha_list[(t_pos - 1) % n]
            r_v = alpha_list[(t_pos + 2) % n]
            if o == w_prime and r_v != w_prime:
                # case 2: the edge before b lies on the triangle
                del alpha_list[t_pos]
                region.add(tri)
            elif r_v == w_prime and o != w_prime:
                del alpha_list[(t_pos + 1) % n]
                region.add(tri)
            elif o == w_prime and r_v == w_prime:
                raise ExcisionError("boundary is not embedded")
            else:
                # case 3: keep the side of the boundary holding the entry
                # edge and close it with the triangle edge through w'
                seq = alpha_list[t_pos + 1 :] + alpha_list[: t_pos + 1]
                # seq starts at q and ends at p; w' appears once inside
                cut = seq.index(w_prime)
                tau1 = [p] + seq[: cut + 1]    # p (b q) ... w'
                tau2 = seq[cut:]               # w' ... p
                entry_in_tau2 = _path_contains_edge(strip, tau2, e_entry)
                entry_in_tau1 = _path_contains_edge(strip, tau1, e_entry)
                if entry_in_tau1 or not entry_in_tau2:
                    raise ExcisionError(
                        "entry edge on the discarded side; case 3 configuration invalid"
                    )
                alpha_list = tau2
                region.add(tri)
        region = _fill_from(strip, region, _cycle_edge_set(strip, alpha_list))
        if len(set(alpha_list)) != len(alpha_list):
            raise ExcisionError("boundary stopped being embedded")

    for t in range(len(alpha_list)):
        e = _edge_between_keys(strip, alpha_list[t], alpha_list[(t + 1) % len(alpha_list)])
        if coloring.edge_color(strip, e) != BLUE:
            raise ExcisionError(f"terminal boundary edge {e} is not blue")
    return _pair_from_triangles(strip, coloring.coset_index, region, False)


def _cycle_edge_set(strip: Strip, cycle: list[VertexKey]) -> set[EdgeKey]:
    n = len(cycle)
    return {
        _edge_between_keys(strip, cycle[t], cycle[(t + 1) % n]) for t in range(n)
    }


def _path_contains_edge(strip: Strip, path: list[VertexKey], edge: EdgeKey) -> bool:
    for a, b in zip(path, path[1:]):
        if _edge_between_keys(strip, a, b) == edge:
            return True
    return False


# -----------------------------------------------------------------------
# Excision


@dataclass
class ExcisionResult:
    pairs: list[DiskPair]
    dropped_nested: int
    classes_by_coset: dict[int, int]


def excise(strip_map: StripMap, method: str = "induction") -> ExcisionResult:
    """One disk pair per red class per coset, ordered by first column,
    with nested pairs removed."""
    problems = strip_map.validate()
    if problems:
        raise ExcisionError("invalid strip map: " + "; ".join(problems[:3]))
    build = disk_pair_induction if method == "induction" else disk_pair_region_grow
    collected: list[DiskPair] = []
    classes_by_coset: dict[int, int] = {}
    for coset in strip_map.target.cosets:
        coloring = color(strip_map, coset.index)
        if all(c != RED for c in coloring.vertex_color.values()):
            continue
        classes = red_classes(strip_map, coloring)
        classes_by_coset[coset.index] = len(classes)
        for cls in classes:
            collected.append(build(strip_map, coloring, cls))
    collected.sort(key=lambda p: (p.leftmost(), p.coset_index, p.boundary_vertices))
    kept: list[DiskPair] = []
    dropped = 0
    for pair in collected:
        nested = any(
            other.contains(pair) and other.triangles != pair.triangles
            for other in collected
        ) or any(other.triangles == pair.triangles for other in kept)
        if nested:
            dropped += 1
        else:
            kept.append(pair)
    return ExcisionResult(kept, dropped, classes_by_coset)


@dataclass
class ExcisionReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_excision(strip_map: StripMap, pairs: Sequence[DiskPair]) -> ExcisionReport:
    """Check the excision postconditions.

    (a) every boundary is all blue for its coset, so it maps into that
    coset's level-0 complex; (b) the strip minus the open disks maps into
    Y; (c) the disks are pairwise disjoint.  Also: boundaries do not
    cross, distinct pairs are nested or disjoint, and every strip edge
    lies on at most two boundaries.
    """
    strip = strip_map.strip
    cusped = strip_map.target
    issues: list[str] = []
    colorings: dict[int, Coloring] = {}
    for pair in pairs:
        ci = pair.coset_index
        if ci not in colorings:
            colorings[ci] = color(strip_map, ci)
        col = colorings[ci]
        for t in range(len(pair.boundary_vertices) - 1):
            e = _edge_between_keys(strip, pair.boundary_vertices[t],
                                   pair.boundary_vertices[t + 1])
            if col.edge_color(strip, e) != BLUE:
                issues.append(f"non-blue boundary edge {e} on pair of coset {ci}")
        members = set(cusped.cosets[ci].members)
        for v in pair.boundary_vertices:
            if strip_map.vertex_map[v] not in members:
                issues.append(f"boundary vertex {v} maps outside the coset complex")
    covered_tris = set()
    for pair in pairs:
        covered_tris |= pair.triangles
    for v in strip.vertices():
        if any(v in p.inner_vertices for p in pairs):
            continue
        if cusped.depth[strip_map.vertex_map[v]] != 0:
            issues.append(f"vertex {v} outside every disk maps out of Y")
    for t in strip.triangles():
        if t in covered_tris:
            continue
        deep = [v for v in strip.triangle_vertices(t)
                if cusped.depth[strip_map.vertex_map[v]] != 0]
        if deep:
            issues.append(f"triangle {t} outside every disk maps out of Y")
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            a, b = pairs[i], pairs[j]
            if a.cells & b.cells:
                issues.append(f"pairs {i} and {j} overlap")
            if _boundaries_cross(a, b) or _boundaries_cross(b, a):
                issues.append(f"boundaries of pairs {i} and {j} cross")
            if not (a.contains(b) or b.contains(a) or not (a.triangles & b.triangles)):
                issues.append(f"pairs {i} and {j} are neither nested nor disjoint")
    edge_use: dict[EdgeKey, int] = {}
    for pair in pairs:
        for e in set(pair.boundary_edges):
            edge_use[e] = edge_use.get(e, 0) + 1
    for e, n in edge_use.items():
        if n > 2:
            issues.append(f"edge {e} lies on {n} > 2 boundaries")
    return ExcisionReport(issues)


def _boundaries_cross(a: DiskPair, b: DiskPair) -> bool:
    """a's boundary crosses b when it has edges strictly inside and strictly
    outside b."""
    edges = set(a.boundary_edges)
    inside = edges & b.inner_edges
    outside = {
        e for e in edges
        if e not in b.inner_edges and e not in set(b.boundary_edges)
    }
    return bool(inside) and bool(outside)
