"""Finite group presentations with peripheral subpresentations.

Exact construction of Cayley balls needs a solved word problem, so group
and peripheral families are restricted to ones with implementable normal
forms: free, free-abelian, hyperbolic surface groups (Dehn's algorithm),
direct products of those, and explicit finite multiplication tables.
Anything else is rejected rather than risk a wrong complex.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .words import (
    EMPTY,
    Word,
    cyclic_reduce,
    cyclic_rotations,
    free_reduce,
    format_word,
    invert,
    multiply,
    parse_word,
    shortlex_key,
)


class PresentationError(ValueError):
    """Raised for malformed presentation text, with a line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UnsupportedFamilyError(ValueError):
    pass


class NormalFormError(ValueError):
    pass


@dataclass(frozen=True)
class PeripheralSpec:
    name: str
    gen_indices: tuple[int, ...]       # 1-based indices into the group generators
    relator_indices: tuple[int, ...]   # group relators supported by the peripheral gens
    family: str                        # "free" | "free-abelian" | "surface<g>"


@dataclass(frozen=True)
class GroupPresentation:
    generators: tuple[str, ...]
    relators: tuple[Word, ...]
    peripherals: tuple[PeripheralSpec, ...]

    def gen_index(self, name: str) -> int:
        return self.generators.index(name) + 1

    def word(self, text: str) -> Word:
        return parse_word(text, self.generators)

    def spell(self, word: Sequence[int]) -> str:
        return format_word(word, self.generators)


_GEN_NAME = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_SURFACE_TAG = re.compile(r"^surface(\d+)$")

SUPPORTED_FAMILY_TAGS = ("free", "free-abelian", "surface<g>")


def parse_presentation(text: str) -> GroupPresentation:
    """Parse the presentation file format.

    Statements are separated by newlines or semicolons::

        gens a,b
        rels aba'b'
        periph P: a [free]

    Words juxtapose generator names; a ``'`` suffix inverts.  Blank
    statements and ``#`` comments are ignored.
    """
    generators: tuple[str, ...] | None = None
    relators: list[Word] = []
    saw_rels = False
    periph_raw: list[tuple[str, list[str], str, int]] = []

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0]
        for stmt in line.split(";"):
            stmt = stmt.strip()
            if not stmt:
                continue
            head, _, rest = stmt.partition(" ")
            head = head.strip()
            if head == "gens":
                if generators is not None:
                    raise PresentationError("duplicate gens line", line_no)
                names = [n.strip() for n in rest.split(",") if n.strip()]
                if not names:
                    raise PresentationError("no generators declared", line_no)
                for name in names:
                    if not _GEN_NAME.match(name) or name == "1":
                        raise PresentationError(f"invalid generator name {name!r}", line_no)
                if len(set(names)) != len(names):
                    raise PresentationError("generator symbols are not distinct", line_no)
                generators = tuple(names)
            elif head == "rels":
                if generators is None:
                    raise PresentationError("rels before gens", line_no)
                saw_rels = True
                for chunk in rest.split(","):
                    chunk = chunk.strip()
                    if not chunk:
                        continue
                    try:
                        word = parse_word(chunk, generators)
                    except ValueError as exc:
                        raise PresentationError(f"unknown generator in relator {chunk!r}: {exc}", line_no)
                    if free_reduce(word):
                        relators.append(free_reduce(word))
            elif head == "periph":
                if generators is None:
                    raise PresentationError("periph before gens", line_no)
                name, colon, body = rest.partition(":")
                if not colon:
                    raise PresentationError("peripheral line needs 'periph NAME: gens [family]'", line_no)
                m = re.search(r"\[([^\]]*)\]\s*$", body)
                if not m:
                    raise PresentationError("peripheral line missing [family] tag", line_no)
                family = m.group(1).strip()
                gen_part = body[: m.start()].strip()
                gen_names = [g.strip() for g in gen_part.split(",") if g.strip()]
                if not gen_names:
                    raise PresentationError("peripheral declares no generators", line_no)
                periph_raw.append((name.strip(), gen_names, family, line_no))
            else:
                raise PresentationError(f"unknown statement {head!r}", line_no)

    if generators is None:
        raise PresentationError("missing gens line")
    if not saw_rels and relators == [] and periph_raw == [] and False:
        pass  # a bare gens line is a legal free presentation

    peripherals = []
    for name, gen_names, family, line_no in periph_raw:
        indices = []
        for g in gen_names:
            if g not in generators:
                raise PresentationError(f"peripheral generator {g!r} is not a group generator", line_no)
            indices.append(generators.index(g) + 1)
        if len(set(indices)) != len(indices):
            raise PresentationError("peripheral generators are not distinct", line_no)
        gen_set = set(indices)
        relator_indices = tuple(
            ri for ri, rel in enumerate(relators) if all(abs(l) in gen_set for l in rel)
        )
        spec = PeripheralSpec(name, tuple(indices), relator_indices, family)
        try:
            _validate_peripheral_family(tuple(relators), spec)
        except UnsupportedFamilyError as exc:
            raise PresentationError(str(exc), line_no)
        peripherals.append(spec)

    names = [p.name for p in peripherals]
    if len(set(names)) != len(names):
        raise PresentationError("duplicate peripheral names")
    return GroupPresentation(generators, tuple(relators), tuple(peripherals))


# ---------------------------------------------------------------------------
# Normal-form providers


class NormalFormProvider:
    """Canonical-form service: equal normal forms iff equal group elements."""

    family = "abstract"
    gen_indices: tuple[int, ...] = ()

    def normal_form(self, word: Sequence[int]) -> Word:
        raise NotImplementedError

    def check_letters(self, word: Sequence[int]) -> None:
        allowed = set(self.gen_indices)
        for letter in word:
            if abs(letter) not in allowed:
                raise NormalFormError(f"letter {letter} outside provider alphabet {sorted(allowed)}")

    def is_identity(self, word: Sequence[int]) -> bool:
        return not self.normal_form(word)

    def equal(self, w1: Sequence[int], w2: Sequence[int]) -> bool:
        return self.normal_form(w1) == self.normal_form(w2)


@dataclass(frozen=True)
class FreeProvider(NormalFormProvider):
    gen_indices: tuple[int, ...] = ()
    family = "free"

    def normal_form(self, word: Sequence[int]) -> Word:
        self.check_letters(word)
        return free_reduce(word)


@dataclass(frozen=True)
class FreeAbelianProvider(NormalFormProvider):
    gen_indices: tuple[int, ...] = ()
    family = "free-abelian"

    def normal_form(self, word: Sequence[int]) -> Word:
        self.check_letters(word)
        exponents = {g: 0 for g in self.gen_indices}
        for letter in word:
            exponents[abs(letter)] += 1 if letter > 0 else -1
        out: list[int] = []
        for g in sorted(self.gen_indices):
            e = exponents[g]
            out.extend([g if e > 0 else -g] * abs(e))
        return tuple(out)


def surface_relator(gen_indices: Sequence[int]) -> Word:
    """Product of commutators [g1,g2][g3,g4]... over consecutive pairs."""
    if len(gen_indices) % 2 != 0:
        raise ValueError("surface relator needs an even number of generators")
    word: list[int] = []
    for i in range(0, len(gen_indices), 2):
        x, y = gen_indices[i], gen_indices[i + 1]
        word.extend([x, y, -x, -y])
    return tuple(word)


class SurfaceProvider(NormalFormProvider):
    """Genus-g surface group (g >= 2) via Dehn's algorithm.

    Dehn reduction yields geodesic words; the canonical representative is
    the shortlex least word in the closure under half-relator swaps
    (replacing half of a cyclic conjugate of the relator or its inverse by
    the complementary half), which connects all geodesic representatives
    of an element in these presentations.
    """

    family_prefix = "surface"

    def __init__(self, gen_indices: Sequence[int], closure_cap: int = 200000):
        if len(gen_indices) < 4 or len(gen_indices) % 2 != 0:
            raise UnsupportedFamilyError(
                "surface family needs 2g generators with g >= 2"
            )
        self.gen_indices = tuple(gen_indices)
        self.genus = len(gen_indices) // 2
        self.family = f"surface{self.genus}"
        self.relator = surface_relator(self.gen_indices)
        self.closure_cap = closure_cap
        rotations: list[Word] = []
        for base in (self.relator, invert(self.relator)):
            rotations.extend(cyclic_rotations(base))
        self._rotations = rotations
        self._half = len(self.relator) // 2
        # prefix -> complement inverse, for every rotation and cut length > half
        self._dehn_table: dict[Word, Word] = {}
        for rot in rotations:
            for cut in range(self._half + 1, len(rot) + 1):
                self._dehn_table.setdefault(rot[:cut], invert(rot[cut:]))
        self._half_table: dict[Word, Word] = {}
        for rot in rotations:
            self._half_table.setdefault(rot[: self._half], invert(rot[self._half:]))
        self._nf_cache: dict[Word, Word] = {}

    def dehn_reduce(self, word: Sequence[int]) -> Word:
        """Shrink until no subword exceeds half of any relator conjugate."""
        w = free_reduce(word)
        changed = True
        max_len = len(self.relator)
        while changed:
            changed = False
            n = len(w)
            for cut in range(max_len, self._half, -1):
                if cut > n:
                    continue
                for i in range(n - cut + 1):
                    piece = w[i : i + cut]
                    repl = self._dehn_table.get(piece)
                    if repl is not None:
                        w = multiply(w[:i], repl, w[i + cut:])
                        changed = True
                        break
                if changed:
                    break
        return w

    def _half_moves(self, word: Word) -> Iterable[Word]:
        n = len(word)
        h = self._half
        for i in range(n - h + 1):
            repl = self._half_table.get(word[i : i + h])
            if repl is not None:
                moved = multiply(word[:i], repl, word[i + h:])
                if len(moved) == n:
                    yield moved

    def normal_form(self, word: Sequence[int]) -> Word:
        self.check_letters(word)
        w0 = free_reduce(word)
        cached = self._nf_cache.get(w0)
        if cached is not None:
            return cached
        w = self.dehn_reduce(w0)
        seen = {w}
        queue = deque([w])
        while queue:
            cur = queue.popleft()
            for nxt in self._half_moves(cur):
                if nxt not in seen:
                    if len(seen) >= self.closure_cap:
                        raise NormalFormError("half-move closure cap exceeded")
                    seen.add(nxt)
                    queue.append(nxt)
        best = min(seen, key=shortlex_key)
        self._nf_cache[w0] = best
        return best


class DirectProductProvider(NormalFormProvider):
    """Direct product of providers over disjoint generator sets."""

    def __init__(self, factors: Sequence[NormalFormProvider]):
        seen: set[int] = set()
        for f in factors:
            if seen & set(f.gen_indices):
                raise UnsupportedFamilyError("product factors share generators")
            seen.update(f.gen_indices)
        self.factors = tuple(factors)
        self.gen_indices = tuple(sorted(seen))
        self._factor_of = {g: i for i, f in enumerate(factors) for g in f.gen_indices}
        self.family = "product(" + ",".join(f.family for f in factors) + ")"

    def normal_form(self, word: Sequence[int]) -> Word:
        self.check_letters(word)
        parts: list[list[int]] = [[] for _ in self.factors]
        for letter in word:
            parts[self._factor_of[abs(letter)]].append(letter)
        out: list[int] = []
        for f, part in zip(self.factors, parts):
            out.extend(f.normal_form(tuple(part)))
        return tuple(out)


class TableProvider(NormalFormProvider):
    """Finite group from an explicit multiplication table.

    ``table[x][y]`` is the product, element 0 the identity;
    ``gen_elements[i]`` is the element represented by ``gen_indices[i]``.
    """

    family = "table"

    def __init__(
        self,
        gen_indices: Sequence[int],
        table: Sequence[Sequence[int]],
        gen_elements: Sequence[int],
    ):
        n = len(table)
        if any(len(row) != n for row in table):
            raise ValueError("multiplication table is not square")
        if len(gen_elements) != len(gen_indices):
            raise ValueError("one table element per generator required")
        self.gen_indices = tuple(gen_indices)
        self.table = tuple(tuple(row) for row in table)
        self.gen_elements = tuple(gen_elements)
        self._inverse = [-1] * n
        for x in range(n):
            for y in range(n):
                if self.table[x][y] == 0:
                    self._inverse[x] = y
        if any(i < 0 for i in self._inverse):
            raise ValueError("table has a non-invertible element")
        self._canonical = self._canonical_words()
        if any(w is None for w in self._canonical):
            raise ValueError("generators do not generate the table group")

    def _canonical_words(self) -> list[Word | None]:
        words: list[Word | None] = [None] * len(self.table)
        words[0] = EMPTY
        queue = deque([0])
        letters = []
        for idx, elem in sorted(zip(self.gen_indices, self.gen_elements)):
            letters.append((idx, elem))
            letters.append((-idx, self._inverse[elem]))
        while queue:
            x = queue.popleft()
            for letter, elem in letters:
                y = self.table[x][elem]
                if words[y] is None:
                    words[y] = words[x] + (letter,)
                    queue.append(y)
        return words

    def element_of(self, word: Sequence[int]) -> int:
        self.check_letters(word)
        pos = {g: e for g, e in zip(self.gen_indices, self.gen_elements)}
        x = 0
        for letter in word:
            e = pos[abs(letter)]
            x = self.table[x][e if letter > 0 else self._inverse[e]]
        return x

    def normal_form(self, word: Sequence[int]) -> Word:
        w = self._canonical[self.element_of(word)]
        assert w is not None
        return w


# ---------------------------------------------------------------------------
# Family recognition


def _as_commutator(rel: Word) -> tuple[int, int] | None:
    """Return {x, y} when rel is conjugate to [x, y] for distinct generators."""
    w = cyclic_reduce(rel)
    if len(w) != 4:
        return None
    for rot in cyclic_rotations(w):
        a, b, c, d = rot
        if c == -a and d == -b and abs(a) != abs(b):
            return (abs(a), abs(b))
    return None


def _is_surface_relator(rel: Word, gen_indices: set[int]) -> bool:
    w = cyclic_reduce(rel)
    if len(w) != 4 * (len(gen_indices) // 2) or len(gen_indices) % 2:
        return False
    for base in (w, invert(w)):
        for rot in cyclic_rotations(base):
            used: set[int] = set()
            ok = True
            for i in range(0, len(rot), 4):
                a, b, c, d = rot[i : i + 4]
                if not (c == -a and d == -b and abs(a) != abs(b)):
                    ok = False
                    break
                if abs(a) in used or abs(b) in used:
                    ok = False
                    break
                used.update((abs(a), abs(b)))
            if ok and used == gen_indices:
                return True
    return False


def _raag_provider(gen_indices: list[int], commuting: set[frozenset[int]]) -> NormalFormProvider:
    """Decompose a commutation graph into a direct product of free factors.

    The factors are the connected components of the complement graph; a
    component with internal commutation edges is not free or a product,
    so the presentation is rejected.
    """
    if len(gen_indices) == 1:
        return FreeProvider(tuple(gen_indices))
    adj = {g: set() for g in gen_indices}
    for pair in commuting:
        a, b = tuple(pair)
        if a in adj and b in adj:
            adj[a].add(b)
            adj[b].add(a)
    # components of the complement graph
    remaining = set(gen_indices)
    components: list[list[int]] = []
    while remaining:
        seed = min(remaining)
        comp = {seed}
        queue = deque([seed])
        while queue:
            x = queue.popleft()
            for y in list(remaining):
                if y not in comp and y not in adj[x]:
                    comp.add(y)
                    queue.append(y)
        remaining -= comp
        components.append(sorted(comp))
    if len(components) == 1:
        comp = components[0]
        internal = {p for p in commuting if p <= set(comp)}
        if internal:
            raise UnsupportedFamilyError(
                "commutation pattern is not a direct product of free and "
                "free-abelian factors"
            )
        return FreeProvider(tuple(comp))
    if all(len(c) == 1 for c in components):
        return FreeAbelianProvider(tuple(g for c in components for g in c))
    factors = []
    for comp in components:
        internal = {p for p in commuting if p <= set(comp)}
        factors.append(_raag_provider(comp, internal))
    return DirectProductProvider(factors)


def group_provider(pres: GroupPresentation) -> NormalFormProvider:
    """Infer a normal-form provider for the whole presentation."""
    gen_indices = list(range(1, len(pres.generators) + 1))
    if not pres.relators:
        return FreeProvider(tuple(gen_indices))
    commutators = [_as_commutator(r) for r in pres.relators]
    if all(c is not None for c in commutators):
        pairs = {frozenset(c) for c in commutators}  # type: ignore[arg-type]
        return _raag_provider(gen_indices, pairs)
    if len(pres.relators) == 1 and _is_surface_relator(pres.relators[0], set(gen_indices)):
        provider = SurfaceProvider(tuple(gen_indices))
        if provider.normal_form(pres.relators[0]) != EMPTY:
            raise UnsupportedFamilyError("relator is not the standard surface relator")
        return provider
    raise UnsupportedFamilyError(
        "presentation is outside the supported families "
        f"{SUPPORTED_FAMILY_TAGS}; refusing to build a possibly-wrong complex"
    )


def _validate_peripheral_family(relators: tuple[Word, ...], spec: PeripheralSpec) -> None:
    gens = set(spec.gen_indices)
    rels = [relators[i] for i in spec.relator_indices]
    if spec.family == "free":
        if rels:
            raise UnsupportedFamilyError(
                f"peripheral {spec.name} tagged free but has relators among the group relators"
            )
        return
    if spec.family == "free-abelian":
        need = {frozenset((a, b)) for a in gens for b in gens if a < b}
        have = set()
        for r in rels:
            c = _as_commutator(r)
            if c is None:
                raise UnsupportedFamilyError(
                    f"peripheral {spec.name}: non-commutator relator in a free-abelian peripheral"
                )
            have.add(frozenset(c))
        if have != need:
            raise UnsupportedFamilyError(
                f"peripheral {spec.name}: free-abelian tag needs exactly the pairwise "
                "commutators of its generators among the group relators"
            )
        return
    m = _SURFACE_TAG.match(spec.family)
    if m:
        genus = int(m.group(1))
        if genus < 2 or len(gens) != 2 * genus:
            raise UnsupportedFamilyError(
                f"peripheral {spec.name}: surface{genus} needs {2 * genus} generators and genus >= 2"
            )
        if len(rels) != 1 or not _is_surface_relator(rels[0], gens):
            raise UnsupportedFamilyError(
                f"peripheral {spec.name}: surface tag needs the standard surface relator"
            )
        return
    raise UnsupportedFamilyError(
        f"unsupported family tag {spec.family!r} (supported: {SUPPORTED_FAMILY_TAGS})"
    )


def peripheral_provider(pres: GroupPresentation, spec: PeripheralSpec) -> NormalFormProvider:
    _validate_peripheral_family(pres.relators, spec)
    if spec.family == "free":
        return FreeProvider(spec.gen_indices)
    if spec.family == "free-abelian":
        return FreeAbelianProvider(spec.gen_indices)
    m = _SURFACE_TAG.match(spec.family)
    assert m
    return SurfaceProvider(spec.gen_indices)


def peripheral_member(provider: NormalFormProvider, gen_indices: Sequence[int], word: Sequence[int]) -> bool:
    """Test membership in the subgroup generated by ``gen_indices``.

    Valid for the shipped families because each is generator-closed under
    normal forms: the normal form of a member uses only member letters.
    """
    allowed = set(gen_indices)
    return all(abs(l) in allowed for l in provider.normal_form(word))
