"""Truncated cusped spaces: a Cayley 2-complex ball with horoballs glued
over every peripheral coset that meets it.

The Cayley ball Y holds the normal forms of words of length <= R, edges
by generator multiplication inside the ball, and one relator cell per
coset of each relator's boundary cycle.  Each peripheral coset meeting
the ball contributes a horoball over its induced subgraph, truncated at
the depth cap.  Frontier flags record where the truncation can lie to
metric or homotopy queries: the radius-R sphere, the depth-cap level, and
every level of a horoball whose base graph touches the sphere.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .complex2 import (
    CAYLEY,
    CAYLEY_EDGE,
    RELATOR_CELL,
    Complex2,
    Complex2Builder,
)
from .horoball import Horoball, HoroballError, graft_horoball
from .presentations import (
    GroupPresentation,
    NormalFormProvider,
    group_provider,
    peripheral_member,
    peripheral_provider,
)
from .words import Word, format_word, invert, multiply, shortlex_key


class BuildError(ValueError):
    pass


class ResourceCapError(BuildError):
    pass


@dataclass(frozen=True)
class PeripheralCoset:
    index: int                     # global coset index across all peripherals
    peripheral: int                # index into presentation.peripherals
    representative: int            # vertex id of the minimal member
    members: tuple[int, ...]       # vertex ids, ascending
    subgraph_edges: tuple[tuple[int, int], ...]   # local positions into members


class CuspedComplex:
    """The assembled truncated cusped space."""

    def __init__(
        self,
        presentation: GroupPresentation,
        provider: NormalFormProvider,
        radius: int,
        depth_cap: int,
        Y: Complex2,
        X: Complex2,
        cosets: list[PeripheralCoset],
        horoballs: list[Horoball],
        word_to_vertex: dict[Word, int],
    ):
        self.presentation = presentation
        self.provider = provider
        self.radius = radius
        self.depth_cap = depth_cap
        self.Y = Y
        self.X = X
        self.cosets = cosets
        self.horoballs = horoballs
        self.basepoint = 0
        self._word_to_vertex = word_to_vertex
        self._member_coset: list[dict[int, int]] = [
            {} for _ in presentation.peripherals
        ]
        for coset in cosets:
            for vid in coset.members:
                self._member_coset[coset.peripheral][vid] = coset.index
        self.depth = [v.depth for v in X.vertices]

    # -- lookups ---------------------------------------------------------

    @property
    def n_y_vertices(self) -> int:
        return len(self.Y.vertices)

    def vertex_by_word(self, word: Word) -> int:
        nf = self.provider.normal_form(word)
        try:
            return self._word_to_vertex[nf]
        except KeyError:
            raise BuildError(f"word {nf} lies outside the radius-{self.radius} ball") from None

    def word_of(self, vid: int) -> Word:
        word = self.X.vertices[vid].word
        if word is None or self.X.vertices[vid].kind != CAYLEY:
            raise BuildError(f"vertex {vid} is not a Cayley vertex")
        return word

    def depth_function(self, vid: int) -> int:
        if not 0 <= vid < len(self.X.vertices):
            raise BuildError(f"unknown vertex {vid}")
        return self.depth[vid]

    def coset_of(self, vid: int, peripheral: int) -> PeripheralCoset:
        """The unique coset of the given peripheral containing a Y vertex."""
        table = self._member_coset[peripheral]
        try:
            return self.cosets[table[vid]]
        except KeyError:
            raise BuildError(f"vertex {vid} is not a Y vertex") from None

    def horoball_of(self, vid: int) -> Horoball | None:
        """The horoball owning a deep vertex; None on Y."""
        coset = self.X.vertices[vid].coset
        if coset is None or self.depth[vid] == 0:
            return None
        return self.horoballs[coset]

    def horoball_vertex(self, coset_index: int, base_vid: int, k: int) -> int:
        h = self.horoballs[coset_index]
        return h.vertex_at(h.base_index(base_vid), k)

    def summary(self) -> dict:
        by_kind: dict[str, int] = {}
        for e in self.X.edges:
            by_kind[str(e.kind[0])] = by_kind.get(str(e.kind[0]), 0) + 1
        faces: dict[str, int] = {}
        for f in self.X.faces:
            faces[str(f.kind[0])] = faces.get(str(f.kind[0]), 0) + 1
        per_coset: dict[str, int] = {}
        for c in self.cosets:
            name = self.presentation.peripherals[c.peripheral].name
            per_coset[name] = per_coset.get(name, 0) + 1
        return {
            "radius": self.radius,
            "depth_cap": self.depth_cap,
            "y_vertices": len(self.Y.vertices),
            "x_vertices": len(self.X.vertices),
            "x_edges": len(self.X.edges),
            "x_faces": len(self.X.faces),
            "edges_by_kind": dict(sorted(by_kind.items())),
            "faces_by_kind": dict(sorted(faces.items())),
            "cosets_by_peripheral": dict(sorted(per_coset.items())),
        }

    def export_dict(self) -> dict:
        doc = self.X.to_dict()
        doc["schema"] = "cuspedspaces-cusped/1"
        doc["summary"] = self.summary()
        doc["basepoint"] = self.basepoint
        doc["radius"] = self.radius
        doc["depth_cap"] = self.depth_cap
        doc["cosets"] = [
            {
                "index": c.index,
                "peripheral": c.peripheral,
                "peripheral_name": self.presentation.peripherals[c.peripheral].name,
                "representative": c.representative,
                "members": list(c.members),
                "subgraph_edges": [list(e) for e in c.subgraph_edges],
            }
            for c in self.cosets
        ]
        return doc


def build_cusped_space(
    presentation: GroupPresentation,
    radius: int,
    depth_cap: int,
    max_vertices: int = 500_000,
) -> CuspedComplex:
    """Assemble the radius-R, depth-capped truncation of the cusped space."""
    if radius < 1:
        raise BuildError("radius must be >= 1")
    if depth_cap < 0:
        raise BuildError("depth cap must be >= 0")
    provider = group_provider(presentation)
    n_gens = len(presentation.generators)
    letters = [l for g in range(1, n_gens + 1) for l in (g, -g)]

    # Breadth-first Cayley ball; ids are assigned in BFS-shortlex order,
    # which makes coset representatives insertion-order independent.
    word_to_vertex: dict[Word, int] = {(): 0}
    order: list[Word] = [()]
    dist = [0]
    queue = deque([0])
    while queue:
        vid = queue.popleft()
        if dist[vid] == radius:
            continue
        for letter in letters:
            w2 = provider.normal_form(order[vid] + (letter,))
            if w2 not in word_to_vertex:
                if len(order) >= max_vertices:
                    raise ResourceCapError(
                        f"vertex cap {max_vertices} exceeded at radius {dist[vid] + 1}"
                    )
                word_to_vertex[w2] = len(order)
                order.append(w2)
                dist.append(dist[vid] + 1)
                queue.append(word_to_vertex[w2])

    builder = Complex2Builder()
    for vid, w in enumerate(order):
        builder.add_vertex(
            kind=CAYLEY,
            frontier=(dist[vid] == radius),
            word=w,
            label=format_word(w, presentation.generators),
        )

    for vid, w in enumerate(order):
        for g in range(1, n_gens + 1):
            w2 = provider.normal_form(w + (g,))
            target = word_to_vertex.get(w2)
            if target is not None and target != vid:
                builder.ensure_edge(vid, target, (CAYLEY_EDGE, g))

    # relator cells, once per coset of the relator's boundary cycle
    seen_cells: set[tuple[int, frozenset[int]]] = set()
    for vid, w in enumerate(order):
        for ri, rel in enumerate(presentation.relators):
            cycle_vertices = [vid]
            ok = True
            cur = w
            for letter in rel:
                cur = provider.normal_form(cur + (letter,))
                nxt = word_to_vertex.get(cur)
                if nxt is None:
                    ok = False
                    break
                cycle_vertices.append(nxt)
            if not ok or cycle_vertices[-1] != vid:
                continue
            ring = cycle_vertices[:-1]
            if len(ring) < 3 or len(set(ring)) != len(ring):
                continue  # degenerate trace, no disk attached
            try:
                eids = [
                    builder.find_edge(ring[i], ring[(i + 1) % len(ring)])
                    for i in range(len(ring))
                ]
            except KeyError:
                continue
            if any(e is None for e in eids):
                continue
            key = (ri, frozenset(eids))  # type: ignore[arg-type]
            if key in seen_cells:
                continue
            seen_cells.add(key)
            builder.add_face(eids, (RELATOR_CELL, ri))  # type: ignore[arg-type]

    y_snapshot = builder.finish()
    Y = _copy_complex(y_snapshot)

    # peripheral cosets among the Y vertices
    cosets: list[PeripheralCoset] = []
    coset_members: list[list[int]] = []
    for pi, spec in enumerate(presentation.peripherals):
        reps: list[tuple[int, Word]] = []   # (coset global index, inverse rep word)
        for vid, w in enumerate(order):
            found = None
            for ci, rep_inv in reps:
                if peripheral_member(provider, spec.gen_indices, multiply(rep_inv, w)):
                    found = ci
                    break
            if found is None:
                ci = len(coset_members)
                reps.append((ci, invert(w)))
                coset_members.append([vid])
                cosets.append(
                    PeripheralCoset(ci, pi, vid, (), ())
                )
            else:
                coset_members[found].append(vid)

    # finalize member tuples and induced subgraphs
    final_cosets: list[PeripheralCoset] = []
    for c in cosets:
        members = tuple(sorted(coset_members[c.index]))
        member_pos = {vid: i for i, vid in enumerate(members)}
        sub_edges = []
        for i, vid in enumerate(members):
            for nbr in y_snapshot.neighbors[vid]:
                j = member_pos.get(nbr)
                if j is not None and i < j:
                    sub_edges.append((i, j))
        final_cosets.append(
            PeripheralCoset(c.index, c.peripheral, members[0], members, tuple(sub_edges))
        )
    cosets = final_cosets

    if depth_cap == 0 and presentation.peripherals:
        # every coset member misses its vertical edge into the cusp
        for c in cosets:
            for vid in c.members:
                builder.set_frontier(vid, True)

    horoballs: list[Horoball] = []
    for c in cosets:
        base_frontier = [y_snapshot.vertices[vid].frontier for vid in c.members]
        _, grid, dtable, tainted = graft_horoball(
            builder,
            c.members,
            c.subgraph_edges,
            depth_cap,
            coset=c.index,
            base_frontier=base_frontier,
            labels=[y_snapshot.vertices[vid].label for vid in c.members],
        )
        horoballs.append((grid, dtable, tainted))  # type: ignore[arg-type]

    X = builder.finish()
    built = []
    for c, (grid, dtable, tainted) in zip(cosets, horoballs):  # type: ignore[misc]
        built.append(Horoball(X, c.members, depth_cap, dtable, grid, c.index, tainted))
    return CuspedComplex(
        presentation, provider, radius, depth_cap, Y, X, cosets, built, word_to_vertex,
    )


def _copy_complex(cx: Complex2) -> Complex2:
    b = Complex2Builder()
    for v in cx.vertices:
        b.add_vertex(kind=v.kind, frontier=v.frontier, word=v.word, label=v.label,
                     coset=v.coset, depth=v.depth, base=v.base)
    for e in cx.edges:
        b.add_edge(e.u, e.v, e.kind)
    for f in cx.faces:
        b.add_face(list(f.edges), f.kind)
    return b.finish()


def load_cusped_export(doc: dict) -> CuspedComplex:
    """Rebuild a cusped complex from its export document.

    Horoball objects and the normal-form provider are not reconstructed;
    the result supports the structural queries used by excision and the
    metric module, not word lookups.
    """
    if doc.get("schema") != "cuspedspaces-cusped/1":
        raise BuildError(f"unexpected schema {doc.get('schema')!r}")
    b = Complex2Builder()
    for v in doc["vertices"]:
        b.add_vertex(
            kind=v["kind"], frontier=v["frontier"], label=v["label"],
            coset=v.get("coset"), depth=v["depth"], base=v.get("base"),
        )
    for e in doc["edges"]:
        b.add_edge(e["u"], e["v"], tuple(e["kind"]))
    for f in doc["faces"]:
        b.add_face(list(f["edges"]), tuple(f["kind"]))
    X = b.finish()
    cosets = [
        PeripheralCoset(
            c["index"], c["peripheral"], c["representative"],
            tuple(c["members"]),
            tuple(tuple(e) for e in c.get("subgraph_edges", [])),
        )
        for c in doc["cosets"]
    ]
    pres_text = doc.get("presentation")
    words: dict[Word, int] = {}
    if pres_text:
        from .presentations import parse_presentation
        from .words import parse_word

        presentation = parse_presentation(pres_text)
        provider = group_provider(presentation)
        for v in doc["vertices"]:
            if v["kind"] == CAYLEY:
                words[parse_word(v["label"], presentation.generators)] = v["id"]
    else:
        names = sorted({c["peripheral_name"] for c in doc["cosets"]})
        from .presentations import GroupPresentation, PeripheralSpec, FreeProvider

        presentation = GroupPresentation(
            ("x",), (),
            tuple(PeripheralSpec(n, (1,), (), "free") for n in names),
        )
        provider = FreeProvider((1,))
    return CuspedComplex(
        presentation, provider, doc.get("radius", 0), doc.get("depth_cap", 0),
        X, X, cosets, [], words,
    )
