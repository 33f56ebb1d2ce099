"""Locally finite 2-complexes with typed cells and truncation frontiers.

Vertices, edges and faces carry kind tags describing their role in a
Cayley complex or a combinatorial horoball.  Frontier flags mark vertices
whose full star may be missing because the complex is a finite truncation
of an infinite one; metric and homotopy answers consult them to certify
exactness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

SCHEMA_VERSION = "cuspedspaces-complex2/1"

# vertex kinds
CAYLEY = "cayley"
HORO = "horo"

# edge kinds
CAYLEY_EDGE = "cayley"       # payload: generator index
HORIZONTAL_B1 = "b1"         # base-graph edge at level 0
HORIZONTAL_B2 = "b2"         # payload: level k >= 1
VERTICAL_B3 = "b3"

# face kinds
RELATOR_CELL = "relator"     # payload: relator index
HORIZONTAL_TRIANGLE = "tri"  # payload: level
VERTICAL_SQUARE = "square"   # payload: lower level
VERTICAL_PENTAGON = "pent"   # payload: lower level (the two-edge side)


class ComplexError(ValueError):
    pass


@dataclass
class Vertex:
    id: int
    kind: str                      # CAYLEY or HORO
    frontier: bool = False
    word: tuple[int, ...] | None = None   # Cayley: normal form
    label: str = ""
    coset: int | None = None       # horoball vertices: owning coset index
    depth: int = 0
    base: int | None = None        # horoball vertices: level-0 vertex id


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    kind: tuple

    def other(self, w: int) -> int:
        if w == self.u:
            return self.v
        if w == self.v:
            return self.u
        raise ComplexError(f"vertex {w} not on edge {self.id}")


@dataclass(frozen=True)
class Face:
    id: int
    kind: tuple
    edges: tuple[int, ...]
    vertices: tuple[int, ...]      # boundary cycle, vertices[i] -- vertices[i+1] spans edges[i]

    def __len__(self) -> int:
        return len(self.edges)


@dataclass
class StarReport:
    vertex: int
    edges: tuple[int, ...]
    faces: tuple[int, ...]
    possibly_incomplete: bool


class Complex2:
    """Immutable validated 2-complex with adjacency indexes."""

    def __init__(self, vertices: list[Vertex], edges: list[Edge], faces: list[Face]):
        self.vertices = vertices
        self.edges = edges
        self.faces = faces
        n = len(vertices)
        self.vertex_edges: list[list[int]] = [[] for _ in range(n)]
        self.neighbors: list[list[int]] = [[] for _ in range(n)]
        self._edge_ids: dict[tuple[int, int], list[int]] = {}
        for e in edges:
            self.vertex_edges[e.u].append(e.id)
            self.vertex_edges[e.v].append(e.id)
            self._edge_ids.setdefault(_pair(e.u, e.v), []).append(e.id)
        for u in range(n):
            nbrs = sorted({self.edges[eid].other(u) for eid in self.vertex_edges[u]})
            self.neighbors[u] = nbrs
        self.edge_faces: list[list[int]] = [[] for _ in edges]
        self._face_by_edgeset: dict[frozenset[int], list[int]] = {}
        for f in faces:
            for eid in set(f.edges):
                self.edge_faces[eid].append(f.id)
            self._face_by_edgeset.setdefault(frozenset(f.edges), []).append(f.id)

    # -- basic queries ------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    def edges_between(self, u: int, v: int) -> list[int]:
        return self._edge_ids.get(_pair(u, v), [])

    def edge_between(self, u: int, v: int) -> int:
        ids = self.edges_between(u, v)
        if not ids:
            raise ComplexError(f"no edge between {u} and {v}")
        return min(ids)

    def faces_with_edges(self, edge_ids: Iterable[int]) -> list[int]:
        return self._face_by_edgeset.get(frozenset(edge_ids), [])

    def star(self, v: int) -> StarReport:
        if not 0 <= v < len(self.vertices):
            raise ComplexError(f"unknown vertex id {v}")
        eids = tuple(sorted(self.vertex_edges[v]))
        fids = sorted({fid for eid in eids for fid in self.edge_faces[eid]
                       if v in self.faces[fid].vertices})
        return StarReport(v, eids, tuple(fids), self.vertices[v].frontier)

    def vertex_faces(self, v: int) -> list[int]:
        return list(self.star(v).faces)

    # -- subcomplexes -------------------------------------------------

    def full_subcomplex(self, vertex_ids: Sequence[int]) -> tuple["Complex2", dict[int, int]]:
        """Induced subcomplex; returns it with the old-to-new vertex map.

        Vertices that lose neighbors are marked frontier in the result,
        on top of their original flags.
        """
        keep = sorted(set(vertex_ids))
        old_to_new = {old: new for new, old in enumerate(keep)}
        keep_set = set(keep)
        b = Complex2Builder()
        for old in keep:
            vtx = self.vertices[old]
            cut = any(n not in keep_set for n in self.neighbors[old])
            b.add_vertex(
                kind=vtx.kind, frontier=vtx.frontier or cut, word=vtx.word,
                label=vtx.label, coset=vtx.coset, depth=vtx.depth,
                base=old_to_new.get(vtx.base) if vtx.base is not None else None,
            )
        edge_map = {}
        for e in self.edges:
            if e.u in keep_set and e.v in keep_set:
                edge_map[e.id] = b.add_edge(old_to_new[e.u], old_to_new[e.v], e.kind)
        for f in self.faces:
            if all(v in keep_set for v in f.vertices) and all(eid in edge_map for eid in f.edges):
                b.add_face([edge_map[eid] for eid in f.edges], f.kind)
        return b.finish(), old_to_new

    # -- validation ---------------------------------------------------

    def validate(self) -> list[str]:
        return validate_complex(self)

    # -- export -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "vertices": [
                {
                    "id": v.id,
                    "kind": v.kind,
                    "frontier": v.frontier,
                    "label": v.label,
                    "depth": v.depth,
                    **({"coset": v.coset} if v.coset is not None else {}),
                    **({"base": v.base} if v.base is not None else {}),
                }
                for v in self.vertices
            ],
            "edges": [
                {"id": e.id, "u": e.u, "v": e.v, "kind": list(e.kind)}
                for e in self.edges
            ],
            "faces": [
                {"id": f.id, "kind": list(f.kind), "edges": list(f.edges),
                 "vertices": list(f.vertices)}
                for f in self.faces
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_dot(self) -> str:
        """1-skeleton in DOT format, deterministically ordered."""
        lines = ["graph skeleton {"]
        for v in self.vertices:
            attrs = f'label="{v.label}"'
            if v.frontier:
                attrs += ", style=dashed"
            lines.append(f"  v{v.id} [{attrs}];")
        for e in self.edges:
            lines.append(f'  v{e.u} -- v{e.v} [label="{e.kind[0]}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


class Complex2Builder:
    """Single-owner builder; finish() validates and freezes."""

    def __init__(self):
        self._vertices: list[Vertex] = []
        self._edges: list[Edge] = []
        self._faces: list[Face] = []
        self._edge_ids: dict[tuple[int, int], list[int]] = {}

    def add_vertex(self, kind: str = CAYLEY, frontier: bool = False,
                   word: tuple[int, ...] | None = None, label: str = "",
                   coset: int | None = None, depth: int = 0,
                   base: int | None = None) -> int:
        vid = len(self._vertices)
        self._vertices.append(Vertex(vid, kind, frontier, word, label, coset, depth, base))
        return vid

    def set_frontier(self, vid: int, flag: bool = True) -> None:
        self._vertices[vid].frontier = flag

    def add_edge(self, u: int, v: int, kind: tuple) -> int:
        n = len(self._vertices)
        if not (0 <= u < n and 0 <= v < n):
            raise ComplexError(f"edge ({u},{v}) references a missing vertex")
        if u == v:
            raise ComplexError(f"self-loop at vertex {u} rejected")
        for eid in self._edge_ids.get(_pair(u, v), []):
            if self._edges[eid].kind == kind:
                raise ComplexError(f"duplicate edge ({u},{v}) of kind {kind}")
        eid = len(self._edges)
        self._edges.append(Edge(eid, u, v, kind))
        self._edge_ids.setdefault(_pair(u, v), []).append(eid)
        return eid

    def ensure_edge(self, u: int, v: int, kind: tuple) -> int:
        for eid in self._edge_ids.get(_pair(u, v), []):
            if self._edges[eid].kind == kind:
                return eid
        return self.add_edge(u, v, kind)

    def find_edge(self, u: int, v: int, kind: tuple | None = None) -> int | None:
        for eid in self._edge_ids.get(_pair(u, v), []):
            if kind is None or self._edges[eid].kind == kind:
                return eid
        return None

    def add_face(self, edge_ids: Sequence[int], kind: tuple) -> int:
        cycle = self._orient_cycle(edge_ids)
        fid = len(self._faces)
        self._faces.append(Face(fid, kind, tuple(edge_ids), cycle))
        return fid

    def _orient_cycle(self, edge_ids: Sequence[int]) -> tuple[int, ...]:
        """Order the boundary as a closed edge path; raise if impossible."""
        if not edge_ids:
            raise ComplexError("face with empty boundary")
        for eid in edge_ids:
            if not 0 <= eid < len(self._edges):
                raise ComplexError(f"face references missing edge {eid}")
        edges = [self._edges[eid] for eid in edge_ids]
        first = edges[0]
        for start in (first.u, first.v):
            cycle = [start, first.other(start)]
            remaining = list(edges[1:])
            ok = True
            while remaining:
                cur = cycle[-1]
                nxt = remaining[0]
                if cur in (nxt.u, nxt.v):
                    cycle.append(nxt.other(cur))
                    remaining.pop(0)
                else:
                    ok = False
                    break
            if ok and cycle[0] == cycle[-1]:
                return tuple(cycle[:-1])
        raise ComplexError(f"face boundary {list(edge_ids)} is not a closed edge path")

    def finish(self) -> Complex2:
        return Complex2(self._vertices, self._edges, self._faces)


# -----------------------------------------------------------------------
# Validation


def _edge_depth(cx: Complex2, e: Edge) -> tuple[int, int]:
    return (cx.vertices[e.u].depth, cx.vertices[e.v].depth)


def _is_horizontal(e: Edge) -> bool:
    return e.kind[0] in (CAYLEY_EDGE, HORIZONTAL_B1, HORIZONTAL_B2)


def validate_complex(cx: Complex2) -> list[str]:
    """All invariant violations; empty iff the complex is well formed."""
    issues: list[str] = []
    seen_pairs: dict[tuple[tuple[int, int], tuple], int] = {}
    for e in cx.edges:
        key = (_pair(e.u, e.v), e.kind)
        if key in seen_pairs:
            issues.append(f"duplicate edge {e.id} between {e.u},{e.v} of kind {e.kind}")
        seen_pairs[key] = e.id
        du, dv = _edge_depth(cx, e)
        if e.kind[0] == HORIZONTAL_B2:
            if du != dv:
                issues.append(f"B2 edge {e.id} endpoints at unequal depth ({du} vs {dv})")
            elif du != e.kind[1]:
                issues.append(f"B2 edge {e.id} level tag {e.kind[1]} != endpoint depth {du}")
            elif du < 1:
                issues.append(f"B2 edge {e.id} at depth {du} < 1")
        elif e.kind[0] == VERTICAL_B3:
            if abs(du - dv) != 1:
                issues.append(f"B3 edge {e.id} does not join consecutive depths ({du},{dv})")
            cu, cv = cx.vertices[e.u], cx.vertices[e.v]
            deep_u = cu if cu.depth > cv.depth else cv
            shallow = cv if deep_u is cu else cu
            if deep_u.base is not None and shallow.base is not None and deep_u.base != shallow.base:
                issues.append(f"B3 edge {e.id} joins different base vertices")
        elif e.kind[0] in (CAYLEY_EDGE, HORIZONTAL_B1):
            if du != dv:
                issues.append(f"horizontal edge {e.id} endpoints at unequal depth")

    for f in cx.faces:
        # boundary closedness
        for i, eid in enumerate(f.edges):
            e = cx.edges[eid]
            a = f.vertices[i]
            b = f.vertices[(i + 1) % len(f.vertices)]
            if _pair(a, b) != _pair(e.u, e.v):
                issues.append(f"face {f.id} boundary not closed at position {i}")
                break
        horiz = sum(1 for eid in f.edges if _is_horizontal(cx.edges[eid]))
        vert = sum(1 for eid in f.edges if cx.edges[eid].kind[0] == VERTICAL_B3)
        if f.kind[0] == HORIZONTAL_TRIANGLE and (horiz, vert) != (3, 0):
            issues.append(f"horizontal triangle {f.id} has {horiz} horizontal / {vert} vertical edges")
        if f.kind[0] == VERTICAL_SQUARE and (horiz, vert) != (2, 2):
            issues.append(f"vertical square {f.id} has {horiz} horizontal / {vert} vertical edges")
        if f.kind[0] == VERTICAL_PENTAGON:
            if (horiz, vert) != (3, 2):
                issues.append(f"vertical pentagon {f.id} has {horiz} horizontal / {vert} vertical edges")
            else:
                issues.extend(_check_pentagon_exclusion(cx, f))

    # adjacency consistency
    for e in cx.edges:
        for end in (e.u, e.v):
            if e.id not in cx.vertex_edges[end]:
                issues.append(f"edge {e.id} missing from star of vertex {end}")
    for f in cx.faces:
        for eid in f.edges:
            if f.id not in cx.edge_faces[eid]:
                issues.append(f"face {f.id} missing from incidence of edge {eid}")
    return issues


def _check_pentagon_exclusion(cx: Complex2, pent: Face) -> list[str]:
    """A pentagon whose boundary bounds a square plus triangle is illegal."""
    vertical = [eid for eid in pent.edges if cx.edges[eid].kind[0] == VERTICAL_B3]
    pent_set = frozenset(pent.edges)
    for eid in vertical:
        for fid in cx.edge_faces[eid]:
            sq = cx.faces[fid]
            if sq.kind[0] != VERTICAL_SQUARE:
                continue
            if not all(v in sq.edges for v in vertical):
                continue
            shared = set(sq.edges) & pent_set
            # union boundary = symmetric difference when exactly one edge
            # of the square is interior (shared with the triangle)
            interior = set(sq.edges) - pent_set
            if len(interior) != 1:
                continue
            tri_edges = (pent_set - set(sq.edges)) | interior
            for tid in cx.faces_with_edges(tri_edges):
                if cx.faces[tid].kind[0] == HORIZONTAL_TRIANGLE:
                    return [
                        f"pentagon {pent.id} violates the exclusion clause: its boundary "
                        f"bounds square {sq.id} plus triangle {tid}"
                    ]
    return []
