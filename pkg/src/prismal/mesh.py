"""Combinatorial substrate: oriented simplices, prisms, complexes and morphisms.

Vertices are opaque integer labels.  A simplex stores one concrete vertex
ordering; that ordering *is* its orientation, and two orderings represent the
same oriented simplex iff they differ by an even permutation.  A prism is an
ordered product of simplices.  Boundaries are returned as formal integer
chains (dicts cell -> coefficient).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable


class MeshError(ValueError):
    """Base class for combinatorial errors."""


class DimensionError(MeshError):
    pass


class IncidenceError(MeshError):
    pass


class StructureError(MeshError):
    pass


def perm_sign(perm: Iterable[int]) -> int:
    """Sign of a permutation given as a sequence of distinct comparables."""
    p = list(perm)
    inv = 0
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                inv += 1
    return -1 if inv % 2 else 1


def reorder_sign(src: tuple, dst: tuple) -> int:
    """Sign of the permutation taking ordering `src` to ordering `dst`.

    Both must enumerate the same underlying set.
    """
    if set(src) != set(dst) or len(src) != len(dst):
        raise IncidenceError(f"orderings {src} and {dst} are not of the same set")
    pos = {v: i for i, v in enumerate(dst)}
    return perm_sign(pos[v] for v in src)


@dataclass(frozen=True, order=True)
class Simplex:
    """Oriented simplex: an ordered tuple of distinct vertex labels.

    The empty simplex is allowed and has dimension -inf by convention; it is
    a face of everything and contributes nothing to boundaries.
    """

    vertices: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise StructureError(f"repeated vertex in simplex {self.vertices}")

    @property
    def dim(self):
        return len(self.vertices) - 1 if self.vertices else -math.inf

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def vset(self) -> frozenset[int]:
        return frozenset(self.vertices)

    def sorted(self) -> "Simplex":
        return Simplex(tuple(sorted(self.vertices)))

    def reversed_orientation(self) -> "Simplex":
        if len(self.vertices) < 2:
            return self
        v = list(self.vertices)
        v[0], v[1] = v[1], v[0]
        return Simplex(tuple(v))

    def orientation_sign(self, other: "Simplex") -> int:
        """+1/-1 comparing stored orientations of the same vertex set."""
        return reorder_sign(self.vertices, other.vertices)

    def has_face(self, f: "Simplex") -> bool:
        return f.vset <= self.vset

    def subsequence(self, vs: frozenset[int]) -> "Simplex":
        """The face on `vs` oriented by the subsequence order of self."""
        return Simplex(tuple(v for v in self.vertices if v in vs))

    def facet_omitting(self, i: int) -> "Simplex":
        return Simplex(self.vertices[:i] + self.vertices[i + 1:])

    def all_faces(self, include_empty: bool = False):
        out = set()
        n = len(self.vertices)
        for k in range(0 if include_empty else 1, n + 1):
            for comb in itertools.combinations(range(n), k):
                out.add(Simplex(tuple(self.vertices[i] for i in comb)))
        if include_empty:
            out.add(EMPTY_SIMPLEX)
        return out

    def __repr__(self):
        return f"<{','.join(map(str, self.vertices))}>"


EMPTY_SIMPLEX = Simplex(())


def faces(s: Simplex, k: int) -> set[Simplex]:
    """All k-dimensional faces, oriented by the subsequence order of `s`."""
    if s.is_empty or not (0 <= k <= s.dim):
        raise DimensionError(f"no {k}-faces of {s}")
    return {
        Simplex(comb)
        for comb in itertools.combinations(s.vertices, k + 1)
    }


def incidence_number(s: Simplex, f: Simplex) -> int:
    """Incidence number [s; f] of a codimension-1 face.

    The face induced by deleting the vertex at position i carries the sign
    (-1)^i; the result compares f's stored orientation against that one.
    """
    if s.is_empty or f.dim != s.dim - 1:
        raise IncidenceError(f"{f} is not a codim-1 face of {s}")
    missing = s.vset - f.vset
    if len(missing) != 1 or not f.vset <= s.vset:
        raise IncidenceError(f"{f} is not a codim-1 face of {s}")
    (v,) = missing
    i = s.vertices.index(v)
    induced = s.facet_omitting(i)
    return (-1) ** i * induced.orientation_sign(f)


def boundary_chain(s: Simplex) -> dict[Simplex, int]:
    """Oriented boundary as a formal chain of codim-1 faces."""
    if s.is_empty or s.dim < 1:
        raise DimensionError(f"boundary needs dim >= 1, got {s}")
    return {s.facet_omitting(i): (-1) ** i for i in range(len(s.vertices))}


def chain_boundary(chain: dict, boundary_fn) -> dict:
    """Apply a boundary operator linearly to a chain, dropping zeros."""
    out: dict = {}
    for cell, coeff in chain.items():
        if cell.dim < 1:
            continue
        for face, sign in boundary_fn(cell).items():
            c = out.get(face, 0) + coeff * sign
            if c:
                out[face] = c
            else:
                out.pop(face, None)
    return out


def join(parts: Iterable[Simplex]) -> Simplex:
    """Iterated join: the simplex on the concatenated vertex lists."""
    verts: list[int] = []
    seen: set[int] = set()
    for p in parts:
        for v in p.vertices:
            if v in seen:
                raise StructureError(f"join shares vertex {v}")
            seen.add(v)
            verts.append(v)
    return Simplex(tuple(verts))


@dataclass(frozen=True, order=True)
class Prism:
    """Oriented prism: an ordered product of nonempty oriented simplices."""

    factors: tuple[Simplex, ...]

    def __post_init__(self):
        if not self.factors:
            raise StructureError("prism needs at least one factor")
        if any(f.is_empty for f in self.factors):
            raise StructureError("prism factors must be nonempty (use EMPTY_SIMPLEX alone)")

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    @property
    def vertex_tuples(self):
        return itertools.product(*(f.vertices for f in self.factors))

    def as_simplex(self) -> Simplex:
        if len(self.factors) != 1:
            raise StructureError("only single-factor prisms convert to simplices")
        return self.factors[0]

    @classmethod
    def from_simplex(cls, s: Simplex) -> "Prism":
        return cls((s,))

    def all_faces(self) -> set["Prism"]:
        """All nonempty faces: products of nonempty faces of the factors."""
        per_factor = [sorted(f.all_faces()) for f in self.factors]
        return {Prism(combo) for combo in itertools.product(*per_factor)}

    def __repr__(self):
        return "x".join(map(repr, self.factors))


def prism_boundary(p: Prism) -> dict[Prism, int]:
    """Oriented prism boundary: alternating sum over factor boundaries."""
    if p.dim < 1:
        raise DimensionError(f"boundary needs dim >= 1, got {p}")
    out: dict[Prism, int] = {}
    offset = 0
    for j, fj in enumerate(p.factors):
        if fj.dim >= 1:
            for face, sign in boundary_chain(fj).items():
                q = Prism(p.factors[:j] + (face,) + p.factors[j + 1:])
                c = out.get(q, 0) + (-1) ** offset * sign
                if c:
                    out[q] = c
                else:
                    out.pop(q, None)
        offset += fj.dim
    return out


def prism_incidence(p: Prism, q: Prism) -> int:
    """Incidence number [p; q] for a codim-1 face differing in one factor."""
    if len(p.factors) != len(q.factors):
        raise IncidenceError("factor counts differ")
    diffs = [j for j, (a, b) in enumerate(zip(p.factors, q.factors)) if a != b]
    if len(diffs) != 1:
        raise IncidenceError(f"{q} does not differ from {p} in exactly one factor")
    j = diffs[0]
    sign = (-1) ** sum(p.factors[i].dim for i in range(j))
    return sign * incidence_number(p.factors[j], q.factors[j])


def is_prism_face(q: Prism, p: Prism) -> bool:
    """Face test for aligned products: factor-wise vertex containment."""
    return (len(q.factors) == len(p.factors)
            and all(a.vset <= b.vset for a, b in zip(q.factors, p.factors)))


class PrismalSet:
    """A finite set of prisms closed under taking faces."""

    def __init__(self, generators: Iterable[Prism]):
        gens = sorted(set(generators))
        self.maximal = tuple(
            p for i, p in enumerate(gens)
            if not any(i != j and is_prism_face(p, q) for j, q in enumerate(gens)))
        cells: set[Prism] = set()
        for p in self.maximal:
            cells |= p.all_faces()
        self.cells = frozenset(cells)

    def __contains__(self, p: Prism) -> bool:
        return p in self.cells

    def __iter__(self):
        return iter(sorted(self.cells))

    def __len__(self):
        return len(self.cells)

    def cells_of_dim(self, k: int):
        return sorted(c for c in self.cells if c.dim == k)

    @property
    def dim(self):
        return max((c.dim for c in self.cells), default=-math.inf)

    def __repr__(self):
        return f"PrismalSet({len(self.maximal)} maximal, {len(self.cells)} cells)"


class SimplicialComplex:
    """Finite abstract simplicial complex, stored via its maximal simplices.

    Cells are kept with ascending-vertex orientation; a face-closure index is
    built on construction so membership tests are O(1).  For abstract
    complexes the intersection-is-a-common-face invariant holds by closure
    under subsets.
    """

    def __init__(self, maximal: Iterable[Simplex]):
        maximal = [m if isinstance(m, Simplex) else Simplex(tuple(m)) for m in maximal]
        if not maximal:
            raise StructureError("complex needs at least one simplex")
        sets = [m.vset for m in maximal]
        keep = []
        for i, s in enumerate(sets):
            if any(i != j and s < t for j, t in enumerate(sets)) :
                continue
            keep.append(maximal[i].sorted())
        self.maximal = tuple(sorted(set(keep)))
        index: dict[frozenset, Simplex] = {}
        for m in self.maximal:
            for f in m.all_faces():
                index[f.vset] = f.sorted()
        self._index = index
        self.cells = frozenset(index.values())
        self.vertices = tuple(sorted({v for c in self.maximal for v in c.vertices}))

    def __contains__(self, s: Simplex) -> bool:
        return s.vset in self._index

    def cell(self, vs: Iterable[int]) -> Simplex:
        key = frozenset(vs)
        if key not in self._index:
            raise StructureError(f"no cell on vertices {sorted(key)}")
        return self._index[key]

    def cells_of_dim(self, k: int):
        return sorted(c for c in self.cells if c.dim == k)

    @property
    def dim(self) -> int:
        return max(c.dim for c in self.maximal)

    def __iter__(self):
        return iter(sorted(self.cells))

    def __repr__(self):
        return f"SimplicialComplex({len(self.maximal)} maximal, {len(self.cells)} cells)"


class SimplicialMorphism:
    """Vertex map between complexes, linear in barycentric coordinates."""

    def __init__(self, source: SimplicialComplex, target: SimplicialComplex,
                 vertex_map: dict[int, int]):
        self.source = source
        self.target = target
        self.vertex_map = dict(vertex_map)
        self.validate()

    def validate(self):
        for v in self.source.vertices:
            if v not in self.vertex_map:
                raise StructureError(f"vertex {v} has no image")
            if self.vertex_map[v] not in set(self.target.vertices):
                raise StructureError(f"image of vertex {v} is not a target vertex")
        for m in self.source.maximal:
            img = frozenset(self.vertex_map[v] for v in m.vertices)
            if img not in self.target._index:
                raise StructureError(
                    f"image of {m} does not span a simplex of the target")

    def image(self, s: Simplex) -> Simplex:
        """Image cell, with the target's canonical (ascending) orientation."""
        if s.is_empty:
            return EMPTY_SIMPLEX
        return self.target.cell({self.vertex_map[v] for v in s.vertices})

    def fiber(self, s: Simplex, y: int) -> Simplex:
        """Subsimplex of `s` over target vertex y, in subsequence order."""
        return Simplex(tuple(v for v in s.vertices if self.vertex_map[v] == y))

    def fibers(self, s: Simplex) -> tuple[Simplex, ...]:
        """Per-vertex fibers of s over its image, ordered like the image."""
        tau = self.image(s)
        return tuple(self.fiber(s, y) for y in tau.vertices)

    def grouping_sign(self, s: Simplex) -> int:
        """Sign of the permutation from s's order to fiber-grouped order."""
        grouped = [v for f in self.fibers(s) for v in f.vertices]
        return reorder_sign(s.vertices, tuple(grouped))

    def preimage_cells(self, tau: Simplex) -> list[Simplex]:
        """All source cells whose image is a face of tau."""
        tv = tau.vset
        return sorted(c for c in self.source.cells
                      if {self.vertex_map[v] for v in c.vertices} <= tv)

    def restriction_to(self, s: Simplex, tau: Simplex) -> Simplex:
        """s ∩ f^{-1}(tau): vertices of s mapping into tau (may be empty)."""
        return Simplex(tuple(v for v in s.vertices if self.vertex_map[v] in tau.vset))


def staircase_simplices(a: Simplex, b: Simplex):
    """Standard triangulation of a x b by monotone staircase paths.

    Yields tuples of (vertex-of-a, vertex-of-b) pairs; each tuple is a
    (dim a + dim b)-simplex of the product.
    """
    na, nb = len(a.vertices), len(b.vertices)
    for ups in itertools.combinations(range(na + nb - 2), na - 1) if na + nb > 2 else [()]:
        path = [(0, 0)]
        i = j = 0
        for step in range(na + nb - 2):
            if step in ups:
                i += 1
            else:
                j += 1
            path.append((i, j))
        yield tuple((a.vertices[i], b.vertices[j]) for i, j in path)


class FiberProduct:
    """Fiber product of two simplicial morphisms with a common target.

    The point set {(x1, x2) : f1(x1) = f2(x2)} is covered by cells indexed by
    pairs of source simplices with equal image; each such locus is an
    iterated join of products of fiber pieces and is triangulated by joins of
    staircase simplices, so every cell is a (single-factor) prism.
    """

    def __init__(self, f1: SimplicialMorphism, f2: SimplicialMorphism):
        if f1.target is not f2.target and f1.target.cells != f2.target.cells:
            raise StructureError("fiber product needs a common target")
        self.f1, self.f2 = f1, f2
        pair_ids: dict[tuple[int, int], int] = {}

        def pid(pair):
            if pair not in pair_ids:
                pair_ids[pair] = len(pair_ids)
            return pair_ids[pair]

        cells: set[Simplex] = set()
        for s1 in f1.source.cells:
            t1 = f1.image(s1)
            for s2 in f2.source.cells:
                if f2.image(s2) != t1:
                    continue
                fibers1 = f1.fibers(s1)
                fibers2 = f2.fibers(s2)
                # per target vertex, triangulate the product of fiber pieces
                per_vertex = [list(staircase_simplices(a, b))
                              for a, b in zip(fibers1, fibers2)]
                for combo in itertools.product(*per_vertex):
                    verts = tuple(pid(p) for block in combo for p in block)
                    cells.add(Simplex(verts))
        self.vertex_pairs = {i: pair for pair, i in pair_ids.items()}
        self.cells = PrismalSet([Prism.from_simplex(c) for c in cells])


def fiber_product(f1: SimplicialMorphism, f2: SimplicialMorphism) -> FiberProduct:
    return FiberProduct(f1, f2)
