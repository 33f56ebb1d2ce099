"""Elementary-move homotopy certificates and explicit loop contractions.

A certificate is a replayable sequence of moves, each crossing a single
2-cell (replacing one boundary arc by the complementary arc) or inserting
or deleting an immediate backtrack.  Region accounting makes "trivial in
B(v, N)" and "avoids a forbidden ball" finitely checkable.

Loops are based closed edge paths and moves never relocate the basepoint,
so raising a loop level by level conjugates it by a vertical tail: the
working path keeps the shape (ascending tail)(core)(descending tail),
the tails growing one edge per level step and cancelling at the end.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .complex2 import (
    RELATOR_CELL,
    Complex2,
    Face,
)
from .cusped import CuspedComplex
from .horoball import Horoball
from .metric import (
    EdgePath,
    bfs_distances,
    bfs_geodesic,
    path_from_vertices,
    trivial_path,
)


class HomotopyError(ValueError):
    pass


class HeadroomError(HomotopyError):
    """The contraction needs horoball levels above the depth cap."""

    def __init__(self, message: str, extra_depth: int = 0):
        super().__init__(message)
        self.extra_depth = extra_depth


# -----------------------------------------------------------------------
# Moves


@dataclass(frozen=True)
class FaceCross:
    face: int
    at: int                                  # edge index where the replaced arc starts
    replaced: tuple[int, ...]                # edge ids along the current path
    replacement: tuple[int, ...]             # edge ids of the complementary arc
    replacement_vertices: tuple[int, ...]    # full vertex run, endpoints included

    kind = "face-cross"


@dataclass(frozen=True)
class BacktrackInsert:
    at: int                                  # vertex index to detour from
    edge: int

    kind = "backtrack-insert"


@dataclass(frozen=True)
class BacktrackDelete:
    at: int                                  # first of the two equal edges
    edge: int

    kind = "backtrack-delete"


Move = FaceCross | BacktrackInsert | BacktrackDelete


def shift_move(move: Move, offset: int) -> Move:
    if isinstance(move, FaceCross):
        return FaceCross(move.face, move.at + offset, move.replaced,
                         move.replacement, move.replacement_vertices)
    if isinstance(move, BacktrackInsert):
        return BacktrackInsert(move.at + offset, move.edge)
    return BacktrackDelete(move.at + offset, move.edge)


def apply_move(cx: Complex2, vertices: list[int], edges: list[int], move: Move) -> None:
    """Apply one move in place; raises on any replay mismatch."""
    if isinstance(move, FaceCross):
        n = len(move.replaced)
        at = move.at
        if at < 0 or at + n > len(edges):
            raise HomotopyError(f"face-cross at {at} out of range")
        if tuple(edges[at : at + n]) != move.replaced:
            raise HomotopyError(f"replay mismatch: replaced arc differs at {at}")
        face = cx.faces[move.face]
        if set(move.replaced) | set(move.replacement) != set(face.edges) or (
            set(move.replaced) & set(move.replacement)
        ):
            raise HomotopyError(
                f"face-cross arcs do not partition the boundary of face {move.face}"
            )
        rv = move.replacement_vertices
        if rv[0] != vertices[at] or rv[-1] != vertices[at + n]:
            raise HomotopyError("replacement endpoints do not match the path")
        if len(rv) != len(move.replacement) + 1:
            raise HomotopyError("replacement vertex/edge counts inconsistent")
        for i, eid in enumerate(move.replacement):
            e = cx.edges[eid]
            if {rv[i], rv[i + 1]} != {e.u, e.v}:
                raise HomotopyError(f"replacement edge {eid} does not join its vertices")
        vertices[at : at + n + 1] = list(rv)
        edges[at : at + n] = list(move.replacement)
    elif isinstance(move, BacktrackInsert):
        at = move.at
        if not 0 <= at < len(vertices):
            raise HomotopyError(f"backtrack-insert at {at} out of range")
        e = cx.edges[move.edge]
        w = vertices[at]
        if w not in (e.u, e.v):
            raise HomotopyError(f"edge {move.edge} does not touch vertex {w}")
        other = e.other(w)
        vertices[at + 1 : at + 1] = [other, w]
        edges[at:at] = [move.edge, move.edge]
    else:
        at = move.at
        if at < 0 or at + 1 >= len(edges) + 0 or at + 1 > len(edges) - 1:
            raise HomotopyError(f"backtrack-delete at {at} out of range")
        if edges[at] != edges[at + 1] or edges[at] != move.edge:
            raise HomotopyError(f"no backtrack pair at {at}")
        if vertices[at] != vertices[at + 2]:
            raise HomotopyError(f"backtrack at {at} does not return")
        del vertices[at + 1 : at + 3]
        del edges[at : at + 2]


# -----------------------------------------------------------------------
# Certificates


@dataclass
class HomotopyCertificate:
    start: EdgePath
    moves: tuple[Move, ...]
    end: EdgePath
    region: frozenset[int]
    stages: tuple[tuple[str, int, int], ...] = ()   # (label, first move, one past last)

    def face_moves(self) -> list[FaceCross]:
        return [m for m in self.moves if isinstance(m, FaceCross)]

    def to_dict(self) -> dict:
        moves = []
        for m in self.moves:
            if isinstance(m, FaceCross):
                moves.append({"kind": m.kind, "face": m.face, "at": m.at,
                              "replaced": list(m.replaced),
                              "replacement": list(m.replacement),
                              "replacement_vertices": list(m.replacement_vertices)})
            else:
                moves.append({"kind": m.kind, "at": m.at, "edge": m.edge})
        return {
            "schema": "cuspedspaces-certificate/1",
            "start": list(self.start.vertices),
            "end": list(self.end.vertices),
            "moves": moves,
            "region": sorted(self.region),
            "stages": [list(s) for s in self.stages],
        }


@dataclass
class CertificateReport:
    ok: bool
    violations: list[str]


def verify_certificate(
    cx: Complex2,
    cert: HomotopyCertificate,
    forbidden: Iterable[int] | None = None,
) -> CertificateReport:
    """Replay the certificate and re-derive its invariants.

    Checks every move against the complex, that the replay ends at the
    stated end path, that the region equals the union of all intermediate
    path vertices and crossed-face vertices, and optionally that the
    region misses a forbidden vertex set.
    """
    violations: list[str] = []
    vertices = list(cert.start.vertices)
    edges = list(cert.start.edges)
    region: set[int] = set(vertices)
    for idx, move in enumerate(cert.moves):
        try:
            apply_move(cx, vertices, edges, move)
        except HomotopyError as exc:
            violations.append(f"replay mismatch at move {idx}: {exc}")
            return CertificateReport(False, violations)
        region.update(vertices)
        if isinstance(move, FaceCross):
            region.update(cx.faces[move.face].vertices)
    if tuple(vertices) != cert.end.vertices or tuple(edges) != cert.end.edges:
        violations.append("replay does not finish at the stated end path")
    if region != set(cert.region):
        violations.append("stated region differs from the replayed region")
    if forbidden is not None:
        hit = sorted(set(cert.region) & set(forbidden))
        if hit:
            violations.append(f"region meets the forbidden set at {hit[:5]}")
    return CertificateReport(not violations, violations)


class CertificateBuilder:
    """Accumulates moves while tracking the working path and region."""

    def __init__(self, cx: Complex2, start: EdgePath):
        self.cx = cx
        self.start = start
        self.vertices = list(start.vertices)
        self.edges = list(start.edges)
        self.moves: list[Move] = []
        self.region: set[int] = set(start.vertices)
        self._stages: list[tuple[str, int, int]] = []
        self._stage_open: tuple[str, int] | None = None
        self._snapshots: list[EdgePath] = [start]

    # -- stage bookkeeping ------------------------------------------

    def begin_stage(self, label: str) -> None:
        self.end_stage()
        self._stage_open = (label, len(self.moves))

    def end_stage(self) -> None:
        if self._stage_open is not None:
            label, first = self._stage_open
            if len(self.moves) > first:
                self._stages.append((label, first, len(self.moves)))
                self._snapshots.append(self.current_path())
            self._stage_open = None

    # -- path state ----------------------------------------------------

    def current_path(self) -> EdgePath:
        return EdgePath(tuple(self.vertices), tuple(self.edges))

    def _record(self, move: Move) -> None:
        apply_move(self.cx, self.vertices, self.edges, move)
        self.moves.append(move)
        self.region.update(self.vertices)
        if isinstance(move, FaceCross):
            self.region.update(self.cx.faces[move.face].vertices)

    # -- elementary operations ------------------------------------------

    def cross_face(self, face_id: int, at: int, n_replaced: int) -> None:
        face = self.cx.faces[face_id]
        replaced = tuple(self.edges[at : at + n_replaced])
        if len(replaced) != n_replaced:
            raise HomotopyError("replaced arc runs past the end of the path")
        replacement, rverts = _complement_arc(
            face, replaced, self.vertices[at], self.vertices[at + n_replaced]
        )
        self._record(FaceCross(face_id, at, replaced, replacement, rverts))

    def insert_backtrack(self, at: int, edge_id: int) -> None:
        self._record(BacktrackInsert(at, edge_id))

    def delete_backtrack(self, at: int) -> None:
        self._record(BacktrackDelete(at, self.edges[at]))

    def delete_backtrack_if_any(self, at: int) -> None:
        if (
            0 <= at < len(self.edges) - 1
            and self.edges[at] == self.edges[at + 1]
            and self.vertices[at] == self.vertices[at + 2]
        ):
            self.delete_backtrack(at)

    def apply_shifted(self, moves: Iterable[Move], offset: int) -> None:
        for m in moves:
            self._record(shift_move(m, offset))

    def reduce_backtracks(self) -> None:
        """Delete immediate backtracks until none remain."""
        changed = True
        while changed:
            changed = False
            for i in range(len(self.edges) - 1):
                if self.edges[i] == self.edges[i + 1] and self.vertices[i] == self.vertices[i + 2]:
                    self.delete_backtrack(i)
                    changed = True
                    break

    def finish(self) -> HomotopyCertificate:
        self.end_stage()
        return HomotopyCertificate(
            self.start,
            tuple(self.moves),
            self.current_path(),
            frozenset(self.region),
            tuple(self._stages),
        )

    def stage_certificates(self) -> list[HomotopyCertificate]:
        """One sub-certificate per stage; their concatenation is the whole."""
        out = []
        for (label, first, last), start, end in zip(
            self._stages, self._snapshots, self._snapshots[1:]
        ):
            region: set[int] = set(start.vertices)
            vertices = list(start.vertices)
            edges = list(start.edges)
            for m in self.moves[first:last]:
                apply_move(self.cx, vertices, edges, m)
                region.update(vertices)
                if isinstance(m, FaceCross):
                    region.update(self.cx.faces[m.face].vertices)
            out.append(HomotopyCertificate(
                start, tuple(self.moves[first:last]), end, frozenset(region),
                ((label, 0, last - first),),
            ))
        return out


def _complement_arc(
    face: Face, replaced: tuple[int, ...], start_vertex: int, end_vertex: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The other boundary arc of ``face``, oriented start -> end."""
    m = len(face.edges)
    cyc_e = face.edges
    cyc_v = face.vertices
    n = len(replaced)
    if n == 0:
        raise HomotopyError("empty replaced arc")
    if set(replaced) - set(cyc_e):
        raise HomotopyError("replaced arc uses edges outside the face boundary")
    for r in range(m):
        for direction in (1, -1):
            ok = True
            for t in range(n):
                if cyc_e[(r + direction * t) % m] != replaced[t]:
                    ok = False
                    break
            if not ok:
                continue
            v_here = cyc_v[r % m] if direction == 1 else cyc_v[(r + 1) % m]
            if v_here != start_vertex:
                continue
            comp_e: list[int] = []
            comp_v: list[int] = [end_vertex]
            if direction == 1:
                pos = (r + n) % m
                for t in range(m - n):
                    idx = (pos + t) % m
                    comp_e.append(cyc_e[idx])
                    comp_v.append(cyc_v[(idx + 1) % m])
            else:
                pos = (r - n) % m
                for t in range(m - n):
                    idx = (pos - t) % m
                    comp_e.append(cyc_e[idx])
                    comp_v.append(cyc_v[idx % m])
            comp_e.reverse()
            comp_v.reverse()
            return tuple(comp_e), tuple(comp_v)
    raise HomotopyError("replaced arc does not lie on the face boundary")


# -----------------------------------------------------------------------
# Radius bounds


@dataclass(frozen=True)
class RadiusBound:
    center: int
    bound: int
    satisfied: bool
    achieved: int


def region_bounds(cx: Complex2, centers: Iterable[int], region: Iterable[int],
                  bound: int) -> list[RadiusBound]:
    region = list(region)
    out = []
    for v in sorted(set(centers)):
        dist = bfs_distances(cx, v)
        achieved = max(dist[w] for w in region)
        out.append(RadiusBound(v, bound, 0 <= achieved <= bound, achieved))
    return out


@dataclass(frozen=True)
class ContractionBounds:
    """Arithmetic radius bounds for contracting loops of length <= K.

    ``horoball_bound`` is 2K+k with k minimal such that K < 2^k; the
    composed bound takes the larger of that and n2 + n1 + K, where n1 is
    the horoball bound applied to the pushed-down loops of length
    < K(2^K + 1) and n2 is the measured constant for filling Y loops of
    length <= K^2(2^K + 1) (supplied empirically, never assumed).  ``n1``
    in the report is the bound applied to loops of length <= 7K+3.
    """

    K: int
    k: int
    horoball_bound: int
    pushdown_loop_bound: int
    n1_internal: int
    y_loop_length_bound: int
    n2: int
    n: int
    n1: int


def _k_of(K: int) -> int:
    k = 0
    while K >= (1 << k):
        k += 1
    return k


def contraction_radius_bound(K: int, n2: int = 0, _remark: bool = True) -> ContractionBounds:
    if K < 1:
        raise HomotopyError("K must be >= 1")
    k = _k_of(K)
    horoball = 2 * K + k
    push_len = K * ((1 << K) + 1)
    n1_internal = 2 * push_len + _k_of(push_len)
    y_len = K * K * ((1 << K) + 1)
    n = max(n2 + n1_internal + K, horoball)
    n1 = contraction_radius_bound(7 * K + 3, n2, _remark=False).n if _remark else 0
    return ContractionBounds(K, k, horoball, push_len, n1_internal, y_len, n2, n, n1)


# -----------------------------------------------------------------------
# Horoball loop machinery
#
# Working paths for loop operations keep the shape
#   (ascending vertical tail) (core) (descending vertical tail)
# and every operation below preserves it.


def _find_valley(levels: list[int]) -> tuple[int, int] | None:
    """Leftmost maximal run bracketed by a descent before and an ascent after."""
    n = len(levels)
    i = 1
    while i < n - 1:
        if levels[i] < levels[i - 1]:
            j = i
            while j + 1 < n and levels[j + 1] == levels[i]:
                j += 1
            if j + 1 < n and levels[j + 1] > levels[i]:
                return (i, j)
            i = j + 1
        else:
            i += 1
    return None


def _find_peak(levels: list[int]) -> tuple[int, int] | None:
    """Leftmost maximal run bracketed by an ascent before and a descent after."""
    n = len(levels)
    i = 1
    while i < n - 1:
        if levels[i] > levels[i - 1]:
            j = i
            while j + 1 < n and levels[j + 1] == levels[i]:
                j += 1
            if j + 1 < n and levels[j + 1] < levels[i]:
                return (i, j)
            i = j + 1
        else:
            i += 1
    return None


def _level_profile(h: Horoball, vertices: Sequence[int]) -> list[int]:
    return [h.level(v) for v in vertices]


def _raise_valley(b: CertificateBuilder, h: Horoball, i: int) -> None:
    """Lift one valley run a single level using vertical squares."""
    pos = i
    k = h.level(b.vertices[pos])
    while True:
        cur = b.vertices[pos]
        nxt = b.vertices[pos + 1] if pos + 1 < len(b.vertices) else None
        if nxt is not None and h.contains(nxt) and h.level(nxt) == k and h.level(cur) == k:
            x, y = h.base_index(cur), h.base_index(nxt)
            sq = h.square_face(x, y, k)
            if sq is None:
                raise HomotopyError(f"missing vertical square over ({x},{y}) at level {k}")
            b.cross_face(sq, pos, 1)
            b.delete_backtrack(pos - 1)
            pos += 1   # the run resumes at (y, k) past the new top edge
        else:
            b.delete_backtrack(pos - 1)
            return


def _slide_to_unimodal(b: CertificateBuilder, h: Horoball) -> None:
    """Raise every valley until the level profile ascends, plateaus, descends.

    A flat run at the basepoint sits below the top without being a valley;
    a vertical backtrack inserted at the path end turns it into one.
    """
    guard = 0
    while True:
        guard += 1
        if guard > 100_000:
            raise HomotopyError("slide did not stabilize")
        levels = _level_profile(h, b.vertices)
        valley = _find_valley(levels)
        if valley is not None:
            _raise_valley(b, h, valley[0])
            continue
        a, z = _core_window(levels)
        if all(levels[t] == levels[a] for t in range(a, z + 1)):
            return
        if a == 0:
            eid = h.vertical_edge(h.base_index(b.vertices[0]), levels[0])
            if eid is None:
                raise HeadroomError("no headroom above the basepoint", 1)
            b.insert_backtrack(0, eid)
        elif z == len(levels) - 1:
            eid = h.vertical_edge(h.base_index(b.vertices[z]), levels[z])
            if eid is None:
                raise HeadroomError("no headroom above the basepoint", 1)
            b.insert_backtrack(z, eid)
        else:
            raise HomotopyError("non-unimodal profile without a valley")


def _core_window(levels: list[int]) -> tuple[int, int]:
    """Vertex index range [a, z] of the plateau of a unimodal profile."""
    a = 0
    while a + 1 < len(levels) and levels[a + 1] > levels[a]:
        a += 1
    z = len(levels) - 1
    while z - 1 >= 0 and levels[z - 1] > levels[z]:
        z -= 1
    return a, z


def _push_run_down(b: CertificateBuilder, h: Horoball, i: int, k: int) -> None:
    """Push one peak run (starting at vertex index i, level k >= 1) down a level."""
    if k < 1:
        raise HomotopyError("cannot push below level 0")
    pos = i
    while True:
        cur = b.vertices[pos]
        nxt = b.vertices[pos + 1] if pos + 1 < len(b.vertices) else None
        if (nxt is not None and h.contains(nxt) and h.level(nxt) == k
                and h.contains(cur) and h.level(cur) == k):
            x, y = h.base_index(cur), h.base_index(nxt)
            d = h.base_distance(x, y)
            half = 1 << (k - 1)
            if k == 1:
                half = 1
            if d <= half:
                face = h.square_face(x, y, k - 1)
                if face is None:
                    raise HomotopyError(f"missing square under ({x},{y}) at level {k - 1}")
                interior = 1
            else:
                geo = h.base_geodesic(x, y)
                mid = geo[d - half]
                face = h.pentagon_face(x, mid, y, k - 1)
                if face is None:
                    raise HomotopyError(
                        f"missing pentagon under ({x},{y}) via {mid} at level {k - 1}"
                    )
                interior = 2
            b.cross_face(face, pos, 1)
            b.delete_backtrack(pos - 1)
            pos += interior
        else:
            b.delete_backtrack(pos - 1)
            return


def _check_closed(loop: EdgePath) -> None:
    if not loop.is_closed():
        raise HomotopyError("loop must be closed")


def _require_in_horoball(h: Horoball, path: EdgePath) -> None:
    for v in path.vertices:
        if not h.contains(v):
            raise HomotopyError(f"vertex {v} is outside the horoball")


def slide_loop_up(h: Horoball, loop: EdgePath) -> tuple[EdgePath, HomotopyCertificate]:
    """Slide a closed horoball loop to a single level (its maximum).

    The certificate uses only vertical squares and backtrack deletions;
    the returned loop is the plateau core of the final path, which equals
    the whole path exactly when the basepoint already sits at the top
    level.
    """
    _check_closed(loop)
    _require_in_horoball(h, loop)
    b = CertificateBuilder(h.complex, loop)
    b.begin_stage("slide")
    _slide_to_unimodal(b, h)
    cert = b.finish()
    levels = _level_profile(h, b.vertices)
    a, z = _core_window(levels)
    core = EdgePath(tuple(b.vertices[a : z + 1]), tuple(b.edges[a:z]))
    return core, cert


def halve_loop(h: Horoball, loop: EdgePath) -> tuple[EdgePath, HomotopyCertificate]:
    """Raise a single-level loop one level, at most halving its length
    plus one.

    Consecutive edge pairs cross a pentagon, or a triangle then a square
    when the chord under them exists and the pentagon is excluded; an odd
    leftover edge crosses one square.  A trivial (e, e^{-1}) loop needs no
    move, and a triangle boundary is removed by its horizontal triangle.
    Returns the new core; the certificate end is that core conjugated by
    one vertical edge at the basepoint.
    """
    _check_closed(loop)
    _require_in_horoball(h, loop)
    levels = _level_profile(h, loop.vertices)
    if len(set(levels)) > 1:
        raise HomotopyError("halving expects a loop at a single level")
    if len(loop) == 0:
        return loop, CertificateBuilder(h.complex, loop).finish()
    k = levels[0]
    if len(loop) == 2 and loop.edges[0] == loop.edges[1]:
        return loop, CertificateBuilder(h.complex, loop).finish()
    if len(loop) == 3:
        x, y, w = (h.base_index(v) for v in loop.vertices[:3])
        tri = h.triangle_face(x, y, w, k)
        if tri is not None:
            b = CertificateBuilder(h.complex, loop)
            b.begin_stage("cap")
            b.cross_face(tri, 0, 3)
            cert = b.finish()
            return cert.end, cert
    if k + 1 > h.depth_cap:
        raise HeadroomError(
            f"halving needs level {k + 1} above depth cap {h.depth_cap}", 1
        )
    b = CertificateBuilder(h.complex, loop)
    b.begin_stage("halve")
    _halve_core(b, h, k)
    cert = b.finish()
    levels = _level_profile(h, b.vertices)
    a, z = _core_window(levels)
    core = EdgePath(tuple(b.vertices[a : z + 1]), tuple(b.edges[a:z]))
    return core, cert


def _halve_core(b: CertificateBuilder, h: Horoball, k: int) -> None:
    """One halving pass: consume the horizontal level-k edges pairwise."""
    while True:
        levels = _level_profile(h, b.vertices)
        positions = [
            t for t in range(len(b.edges))
            if levels[t] == k and levels[t + 1] == k
        ]
        if not positions:
            return
        t = positions[0]
        x = h.base_index(b.vertices[t])
        y = h.base_index(b.vertices[t + 1])
        if t + 1 in positions:
            z_base = h.base_index(b.vertices[t + 2])
            if z_base == x:
                b.delete_backtrack(t)
                continue
            chord = h.horizontal_edge(x, z_base, k)
            if chord is None:
                pent = h.pentagon_face(x, y, z_base, k)
                if pent is None:
                    raise HomotopyError(
                        f"missing pentagon over ({x},{y},{z_base}) at level {k}"
                    )
                b.cross_face(pent, t, 2)
            else:
                tri = h.triangle_face(x, y, z_base, k)
                sq = h.square_face(x, z_base, k)
                if tri is None or sq is None:
                    raise HomotopyError(
                        f"missing triangle+square over ({x},{y},{z_base}) at level {k}"
                    )
                b.cross_face(tri, t, 2)
                b.cross_face(sq, t, 1)
        else:
            sq = h.square_face(x, y, k)
            if sq is None:
                raise HomotopyError(f"missing square over ({x},{y}) at level {k}")
            b.cross_face(sq, t, 1)
        b.delete_backtrack_if_any(t - 1)


@dataclass
class ContractionResult:
    certificate: HomotopyCertificate
    bounds: list[RadiusBound]
    bound_value: int
    stage_certificates: list[HomotopyCertificate]
    arithmetic: ContractionBounds | None = None

    @property
    def all_satisfied(self) -> bool:
        return all(rb.satisfied for rb in self.bounds)


def contract_horoball_loop(h: Horoball, loop: EdgePath) -> ContractionResult:
    """Contract a closed horoball loop to its basepoint.

    Slides the loop to its top level with squares, then halves with
    pentagons until the core is trivial, and finally unwinds the vertical
    tails.  The certificate region satisfies region within B(v, 2K+k)
    for every vertex v of the loop, K the loop length and k minimal with
    K < 2^k.
    """
    _check_closed(loop)
    _require_in_horoball(h, loop)
    K = len(loop)
    if K == 0:
        cert = CertificateBuilder(h.complex, loop).finish()
        return ContractionResult(cert, [], 0, [])
    bound_val = 2 * K + _k_of(K)
    b = CertificateBuilder(h.complex, loop)
    b.begin_stage("reduce")
    b.reduce_backtracks()
    b.begin_stage("slide")
    _slide_to_unimodal(b, h)
    while True:
        levels = _level_profile(h, b.vertices)
        a, z = _core_window(levels)
        core_len = z - a
        if core_len == 0:
            break
        k = levels[a]
        if core_len == 2 and b.edges[a] == b.edges[a + 1]:
            b.begin_stage("cap")
            b.delete_backtrack(a)
            continue
        if core_len == 3:
            x, y, w = (h.base_index(b.vertices[t]) for t in (a, a + 1, a + 2))
            tri = h.triangle_face(x, y, w, k)
            if tri is not None:
                b.begin_stage("cap")
                b.cross_face(tri, a, 3)
                continue
        if k + 1 > h.depth_cap:
            raise HeadroomError(
                f"contraction needs level {k + 1} above depth cap {h.depth_cap}; "
                f"rebuild with at least {k + 1 - h.depth_cap} more depth",
                k + 1 - h.depth_cap,
            )
        b.begin_stage(f"halve@{k}")
        _halve_core(b, h, k)
    b.begin_stage("unwind")
    b.reduce_backtracks()
    cert = b.finish()
    if len(cert.end) != 0:
        raise HomotopyError("contraction did not reach the basepoint")
    bounds = region_bounds(h.complex, set(loop.vertices), cert.region, bound_val)
    return ContractionResult(cert, bounds, bound_val, b.stage_certificates())


def push_horoball_path_to_Y(h: Horoball, path: EdgePath) -> tuple[EdgePath, HomotopyCertificate]:
    """Push a horoball path with level-0 endpoints down to the base graph.

    Every peak run descends one level at a time across squares and
    pentagons; a horizontal edge at level k expands to at most two edges
    at level k-1, so the result has length < K * 2^K for K the input
    length.
    """
    _require_in_horoball(h, path)
    if h.level(path.start) != 0 or h.level(path.end) != 0:
        raise HomotopyError("path endpoints must be at depth 0")
    b = CertificateBuilder(h.complex, path)
    b.begin_stage("push")
    while True:
        levels = _level_profile(h, b.vertices)
        if max(levels) == 0:
            break
        peak = _find_peak(levels)
        if peak is None:
            raise HomotopyError("no interior peak found; endpoints not at level 0?")
        _push_run_down(b, h, peak[0], levels[peak[0]])
    b.begin_stage("reduce")
    b.reduce_backtracks()
    cert = b.finish()
    return cert.end, cert


# -----------------------------------------------------------------------
# Loops in Y: bounded search over relator-cell crossings


@dataclass
class SearchBudget:
    moves: int = 10_000


def _pure_apply(cx: Complex2, state: tuple[tuple[int, ...], tuple[int, ...]],
                descriptor: tuple) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    vertices, edges = list(state[0]), list(state[1])
    try:
        if descriptor[0] == "del":
            _, at = descriptor
            apply_move(cx, vertices, edges, BacktrackDelete(at, edges[at]))
        else:
            _, fid, at, n = descriptor
            replaced = tuple(edges[at : at + n])
            replacement, rverts = _complement_arc(
                cx.faces[fid], replaced, vertices[at], vertices[at + n]
            )
            apply_move(cx, vertices, edges,
                       FaceCross(fid, at, replaced, replacement, rverts))
    except HomotopyError:
        return None
    return tuple(vertices), tuple(edges)


def _successors(cx: Complex2, state, face_kinds: tuple[str, ...]):
    vertices, edges = state
    n = len(edges)
    for i in range(n - 1):
        if edges[i] == edges[i + 1] and vertices[i] == vertices[i + 2]:
            yield ("del", i)
    for i in range(n):
        for fid in cx.edge_faces[edges[i]]:
            face = cx.faces[fid]
            if face.kind[0] not in face_kinds:
                continue
            boundary = set(face.edges)
            length = 0
            while i + length < n and edges[i + length] in boundary and length < len(face.edges):
                length += 1
            for take in range(length, 0, -1):
                if len(set(edges[i : i + take])) == take:
                    yield ("cross", fid, i, take)


def contract_Y_loop(
    cx: Complex2,
    loop: EdgePath,
    budget: SearchBudget | None = None,
    face_kinds: tuple[str, ...] = (RELATOR_CELL,),
) -> HomotopyCertificate:
    """Contract a loop crossing relator cells only, by bounded best-first
    search.  Failure means the move budget ran out, never that the loop
    is essential.
    """
    _check_closed(loop)
    budget = budget or SearchBudget()
    start = (loop.vertices, loop.edges)
    came: dict = {start: None}
    heap = [(len(loop.edges), 0, start)]
    counter = 1
    expanded = 0
    goal = None
    while heap:
        _, _, state = heapq.heappop(heap)
        if len(state[1]) == 0:
            goal = state
            break
        expanded += 1
        if expanded > budget.moves:
            raise HomotopyError(
                f"move budget {budget.moves} exhausted; contraction inconclusive"
            )
        for descriptor in _successors(cx, state, face_kinds):
            nxt = _pure_apply(cx, state, descriptor)
            if nxt is None or nxt in came:
                continue
            came[nxt] = (state, descriptor)
            heapq.heappush(heap, (len(nxt[1]), counter, nxt))
            counter += 1
    if goal is None:
        raise HomotopyError("loop does not contract within the truncated complex")
    descriptors = []
    cur = goal
    while came[cur] is not None:
        prev, descriptor = came[cur]
        descriptors.append(descriptor)
        cur = prev
    descriptors.reverse()
    b = CertificateBuilder(cx, loop)
    b.begin_stage("search")
    for d in descriptors:
        if d[0] == "del":
            b.delete_backtrack(d[1])
        else:
            b.cross_face(d[1], d[2], d[3])
    return b.finish()


# -----------------------------------------------------------------------
# Composite contraction in the cusped space


def contract_loop(
    cusped: CuspedComplex,
    loop: EdgePath,
    budget: SearchBudget | None = None,
) -> ContractionResult:
    """Contract a closed loop in the cusped space.

    Loops inside a single horoball use the slide-and-halve contraction;
    loops in Y use the bounded relator search; mixed loops push each
    maximal horoball excursion down to the base graph first and then
    contract the resulting Y loop.  The reported arithmetic bound N(K)
    follows the composed recipe (the larger of 2K+k and n2+n1+K).
    """
    _check_closed(loop)
    X = cusped.X
    K = max(len(loop), 1)
    arithmetic = contraction_radius_bound(K)
    depths = [cusped.depth[v] for v in loop.vertices]

    if len(loop) == 0:
        cert = CertificateBuilder(X, loop).finish()
        return ContractionResult(cert, [], arithmetic.n, [], arithmetic)

    owners = {X.vertices[v].coset for v in loop.vertices if cusped.depth[v] >= 1}
    if max(depths) >= 1 and len(owners) == 1:
        h = cusped.horoballs[next(iter(owners))]
        if all(h.contains(v) for v in loop.vertices):
            result = contract_horoball_loop(h, loop)
            result.arithmetic = arithmetic
            return result

    if max(depths) == 0:
        cert = contract_Y_loop(X, loop, budget)
        bounds = region_bounds(X, set(loop.vertices), cert.region, arithmetic.n)
        return ContractionResult(cert, bounds, arithmetic.n, [cert], arithmetic)

    b = CertificateBuilder(X, loop)
    if depths[0] >= 1:
        # conjugate by the vertical descent so the loop opens and closes in Y
        v0 = loop.vertices[0]
        h0 = cusped.horoball_of(v0)
        assert h0 is not None
        i0, k0 = h0.local(v0)
        b.begin_stage("conjugate")
        for t in range(k0):
            eid = h0.vertical_edge(i0, k0 - 1 - t)
            assert eid is not None
            b.insert_backtrack(t, eid)
        end0 = len(b.vertices) - 1
        for t in range(k0):
            eid = h0.vertical_edge(i0, k0 - 1 - t)
            assert eid is not None
            b.insert_backtrack(end0 + t, eid)

    b.begin_stage("push")
    while True:
        profile = [cusped.depth[v] for v in b.vertices]
        peak = _find_peak(profile)
        if peak is None:
            break
        i = peak[0]
        coset = X.vertices[b.vertices[i]].coset
        assert coset is not None
        _push_run_down(b, cusped.horoballs[coset], i, profile[i])
    b.begin_stage("reduce")
    b.reduce_backtracks()

    if len(b.edges) > 0:
        profile = [cusped.depth[v] for v in b.vertices]
        zero = [t for t, d in enumerate(profile) if d == 0]
        if not zero:
            raise HomotopyError("pushdown left no vertex in Y")
        lo, hi = zero[0], zero[-1]
        if any(profile[t] != 0 for t in range(lo, hi + 1)):
            raise HomotopyError("pushdown left deep vertices between the tails")
        if b.vertices[lo] != b.vertices[hi]:
            raise HomotopyError("the Y window is not closed")
        sub = EdgePath(tuple(b.vertices[lo : hi + 1]), tuple(b.edges[lo:hi]))
        if len(sub) > 0:
            y_cert = contract_Y_loop(X, sub, budget)
            b.begin_stage("contract-Y")
            b.apply_shifted(y_cert.moves, lo)
        b.begin_stage("unwind")
        b.reduce_backtracks()
    cert = b.finish()
    if len(cert.end) != 0:
        raise HomotopyError("composite contraction did not close up")
    bounds = region_bounds(X, set(loop.vertices), cert.region, arithmetic.n)
    return ContractionResult(cert, bounds, arithmetic.n, b.stage_certificates(), arithmetic)


# -----------------------------------------------------------------------
# Fellow-traveler rectangles


@dataclass
class RectangleResult:
    certificate: HomotopyCertificate
    quad_boundaries: list[int]
    max_quad_boundary: int
    min_distance_to_center: int | None


def fill_rectangle(
    cusped: CuspedComplex,
    r_seg: EdgePath,
    s_seg: EdgePath,
    gamma: EdgePath,
    beta: EdgePath,
    delta_hat: int,
    center: int | None = None,
    budget: SearchBudget | None = None,
) -> RectangleResult:
    """Homotope one fellow-traveling segment onto the other.

    ``gamma`` joins the starts, ``beta`` the ends, and the segments must
    have equal length with d(r(j), s(j)) <= delta_hat pointwise.  The
    rectangle splits into quadrilaterals with boundary length at most
    2*delta_hat + 2; each is contracted with `contract_loop` and the
    pieces compose into a certificate from r to (gamma, s, beta^{-1}).
    """
    X = cusped.X
    if len(r_seg) != len(s_seg):
        raise HomotopyError("segments must have equal length")
    if gamma.start != r_seg.start or gamma.end != s_seg.start:
        raise HomotopyError("gamma must join the segment starts")
    if beta.start != r_seg.end or beta.end != s_seg.end:
        raise HomotopyError("beta must join the segment ends")
    n = len(r_seg)
    if r_seg.vertices == s_seg.vertices and len(gamma) == 0 and len(beta) == 0:
        cert = CertificateBuilder(X, r_seg).finish()
        return RectangleResult(cert, [], 0, _min_center_distance(X, cert, center))

    rungs: list[EdgePath] = [gamma]          # rung j runs r(j) -> s(j)
    for j in range(1, n):
        rungs.append(bfs_geodesic(X, r_seg.vertices[j], s_seg.vertices[j]))
    rungs.append(beta)

    quad_boundaries = []
    b = CertificateBuilder(X, r_seg)
    if len(gamma) > 0:
        b.begin_stage("gamma")
        for t, eid in enumerate(gamma.edges):
            b.insert_backtrack(t, eid)
    for j in range(n):
        # invariant: current path = gamma . s[0..j] . rung_j^{-1} . r[j..n]
        pos_a = len(gamma) + j
        a_len = len(rungs[j]) + 1
        Bj = _compose(X, s_seg.subpath(j, j + 1), rungs[j + 1].reversed())
        quad = 1 + len(rungs[j]) + 1 + len(rungs[j + 1])
        quad_boundaries.append(quad)
        if quad > 2 * delta_hat + 2:
            raise HomotopyError(
                f"quadrilateral {j} has boundary {quad} > {2 * delta_hat + 2}; "
                "segments are not delta-matched"
            )
        loop = _compose(X, rungs[j].reversed(), r_seg.subpath(j, j + 1),
                        rungs[j + 1], s_seg.subpath(j, j + 1).reversed())
        piece = contract_loop(cusped, loop, budget)
        b.begin_stage(f"quad-{j}")
        q = pos_a + a_len
        for t, eid in enumerate(reversed(Bj.edges)):
            b.insert_backtrack(q + t, eid)
        b.apply_shifted(piece.certificate.moves, pos_a)
    cert = b.finish()
    expected = _compose(X, gamma, s_seg, beta.reversed())
    if cert.end.vertices != expected.vertices:
        raise HomotopyError("rectangle composition did not reach gamma.s.beta^{-1}")
    return RectangleResult(cert, quad_boundaries, max(quad_boundaries),
                           _min_center_distance(X, cert, center))


def _compose(cx: Complex2, *paths: EdgePath) -> EdgePath:
    out = paths[0]
    for p in paths[1:]:
        out = out.concat(p)
    return out


def _min_center_distance(cx: Complex2, cert: HomotopyCertificate, center: int | None) -> int | None:
    if center is None:
        return None
    dist = bfs_distances(cx, center)
    return min(dist[v] for v in cert.region)
