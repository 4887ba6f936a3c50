"""Exact polynomial exterior calculus in barycentric coordinates.

Coordinates come in groups, one per simplex factor of the underlying cell;
each group carries the relation "sum of its variables = 1".  Forms are kept
in the redundant variables; equality, degree and integration questions go
through `canonicalize`, which eliminates the last variable of every group.
All coefficients are exact rationals.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .mesh import Prism, Simplex, StructureError

Q = Fraction


class FormError(ValueError):
    pass


class DegreeError(FormError):
    pass


class ContextError(FormError):
    pass


BASE_TAG = "t"


@dataclass(frozen=True)
class CoordSystem:
    """Ordered coordinate groups (tag, vertex tuple); one relation per group.

    Variable names are "tag:vertex".  Groups tagged "t" are base directions
    (the image of the cell under its projection); all others are fiber
    directions.
    """

    groups: tuple[tuple[str, tuple[int, ...]], ...]

    @functools.cached_property
    def names(self) -> tuple[str, ...]:
        out = []
        for tag, verts in self.groups:
            out.extend(f"{tag}:{v}" for v in verts)
        if len(set(out)) != len(out):
            raise ContextError(f"coordinate names collide in {out}")
        return tuple(out)

    @functools.cached_property
    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    @functools.cached_property
    def group_of(self) -> tuple[int, ...]:
        out = []
        for g, (_, verts) in enumerate(self.groups):
            out.extend([g] * len(verts))
        return tuple(out)

    @functools.cached_property
    def group_vars(self) -> tuple[tuple[int, ...], ...]:
        out, pos = [], 0
        for _, verts in self.groups:
            out.append(tuple(range(pos, pos + len(verts))))
            pos += len(verts)
        return tuple(out)

    @property
    def nvars(self) -> int:
        return len(self.names)

    @property
    def cell_dim(self) -> int:
        return self.nvars - len(self.groups)

    @functools.cached_property
    def base_groups(self) -> tuple[int, ...]:
        return tuple(g for g, (tag, _) in enumerate(self.groups) if tag == BASE_TAG)

    @functools.cached_property
    def fiber_groups(self) -> tuple[int, ...]:
        return tuple(g for g, (tag, _) in enumerate(self.groups) if tag != BASE_TAG)

    def var(self, tag: str, vertex: int) -> int:
        return self.index[f"{tag}:{vertex}"]

    def __repr__(self):
        return "Ctx[" + "; ".join(f"{t}:{v}" for t, v in self.groups) + "]"


def simplex_context(s: Simplex, tag: str = "l") -> CoordSystem:
    if s.is_empty:
        raise ContextError("no coordinates on the empty simplex")
    return CoordSystem(((tag, s.vertices),))


def prism_context(p: Prism) -> CoordSystem:
    return CoordSystem(tuple((f"m:{j}", f.vertices) for j, f in enumerate(p.factors)))


def pi_context(base: Simplex, fibers: Iterable[Simplex]) -> CoordSystem:
    """Context of a trivial prism base x fiber_0 x ... x fiber_s."""
    groups = [(BASE_TAG, base.vertices)]
    groups += [(f"m:{j}", f.vertices) for j, f in enumerate(fibers)]
    return CoordSystem(tuple(groups))


class Poly:
    """Multivariate polynomial over Q in the variables of a CoordSystem."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: CoordSystem, terms: Mapping[tuple[int, ...], Fraction] | None = None):
        self.ctx = ctx
        self.terms: dict[tuple[int, ...], Fraction] = {}
        if terms:
            for e, c in terms.items():
                c = Q(c)
                if c:
                    self.terms[tuple(e)] = c

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, ctx: CoordSystem, c) -> "Poly":
        z = (0,) * ctx.nvars
        return cls(ctx, {z: Q(c)})

    @classmethod
    def zero(cls, ctx: CoordSystem) -> "Poly":
        return cls(ctx)

    @classmethod
    def variable(cls, ctx: CoordSystem, i: int) -> "Poly":
        e = [0] * ctx.nvars
        e[i] = 1
        return cls(ctx, {tuple(e): Q(1)})

    # -- ring operations ----------------------------------------------
    def _chk(self, other: "Poly"):
        if self.ctx is not other.ctx and self.ctx != other.ctx:
            raise ContextError("polynomials live in different contexts")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.ctx, other)
        self._chk(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            s = t.get(e, Q(0)) + c
            if s:
                t[e] = s
            else:
                t.pop(e, None)
        return Poly(self.ctx, t)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.ctx, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly(self.ctx, {e: c * Q(other) for e, c in self.terms.items()})
        self._chk(other)
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = t.get(e, Q(0)) + c1 * c2
                if s:
                    t[e] = s
                else:
                    t.pop(e, None)
        return Poly(self.ctx, t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly.const(self.ctx, 1)
        for _ in range(n):
            out = out * self
        return out

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.ctx, other)
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        return hash((self.ctx, tuple(sorted(self.terms.items()))))

    # -- calculus ------------------------------------------------------
    def diff(self, i: int) -> "Poly":
        t: dict = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                e2 = tuple(e2)
                s = t.get(e2, Q(0)) + c * e[i]
                if s:
                    t[e2] = s
                else:
                    t.pop(e2, None)
        return Poly(self.ctx, t)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def degree_in(self, vars_: Iterable[int]) -> int:
        vs = tuple(vars_)
        return max((sum(e[i] for i in vs) for e in self.terms), default=0)

    def substitute(self, images: Mapping[int, "Poly"], target: CoordSystem) -> "Poly":
        """Substitute every variable by its image polynomial over `target`."""
        out = Poly.zero(target)
        cache: dict[tuple[int, int], Poly] = {}

        def power(i, n):
            if (i, n) not in cache:
                cache[(i, n)] = images[i] ** n
            return cache[(i, n)]

        for e, c in self.terms.items():
            term = Poly.const(target, c)
            for i, n in enumerate(e):
                if n:
                    term = term * power(i, n)
            out = out + term
        return out

    def evaluate(self, point: Iterable) -> Fraction:
        pt = [Q(x) for x in point]
        total = Q(0)
        for e, c in self.terms.items():
            v = c
            for i, n in enumerate(e):
                if n:
                    v *= pt[i] ** n
            total += v
        return total

    def evaluate_float(self, point) -> float:
        total = 0.0
        for e, c in self.terms.items():
            v = float(c)
            for i, n in enumerate(e):
                if n:
                    v *= float(point[i]) ** n
            total += v
        return total

    def homogeneous_parts(self, vars_: Iterable[int] | None = None) -> dict[int, "Poly"]:
        vs = tuple(vars_) if vars_ is not None else tuple(range(self.ctx.nvars))
        parts: dict[int, dict] = {}
        for e, c in self.terms.items():
            m = sum(e[i] for i in vs)
            parts.setdefault(m, {})[e] = c
        return {m: Poly(self.ctx, t) for m, t in parts.items()}

    def map_context(self, target: CoordSystem) -> "Poly":
        """Reinterpret by variable name into a context containing the same names."""
        mapping = [target.index[n] for n in self.ctx.names]
        t: dict = {}
        for e, c in self.terms.items():
            e2 = [0] * target.nvars
            for i, n in enumerate(e):
                e2[mapping[i]] = n
            t[tuple(e2)] = c
        return Poly(target, t)

    def __repr__(self):
        if not self.terms:
            return "0"
        names = self.ctx.names
        bits = []
        for e, c in sorted(self.terms.items()):
            mono = "*".join(
                f"{names[i]}^{n}" if n > 1 else names[i]
                for i, n in enumerate(e) if n)
            bits.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(bits)


class Form:
    """Differential form with Poly coefficients; wedge part stored sorted."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: CoordSystem, terms: Mapping[tuple[int, ...], Poly] | None = None):
        self.ctx = ctx
        self.terms: dict[tuple[int, ...], Poly] = {}
        if terms:
            for dv, p in terms.items():
                dv = tuple(dv)
                if list(dv) != sorted(set(dv)):
                    raise FormError(f"wedge indices must be strictly increasing: {dv}")
                if p:
                    self.terms[dv] = p

    @classmethod
    def zero(cls, ctx: CoordSystem) -> "Form":
        return cls(ctx)

    @classmethod
    def from_poly(cls, p: Poly) -> "Form":
        return cls(p.ctx, {(): p})

    @classmethod
    def const(cls, ctx: CoordSystem, c) -> "Form":
        return cls.from_poly(Poly.const(ctx, c))

    @classmethod
    def d_var(cls, ctx: CoordSystem, i: int) -> "Form":
        return cls(ctx, {(i,): Poly.const(ctx, 1)})

    def _chk(self, other: "Form"):
        if self.ctx != other.ctx:
            raise ContextError("forms live in different contexts")

    def __add__(self, other: "Form") -> "Form":
        self._chk(other)
        t = dict(self.terms)
        for dv, p in other.terms.items():
            s = t.get(dv, Poly.zero(self.ctx)) + p
            if s:
                t[dv] = s
            else:
                t.pop(dv, None)
        return Form(self.ctx, t)

    def __neg__(self):
        return Form(self.ctx, {dv: -p for dv, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, Poly):
            return Form(self.ctx, {dv: p * scalar for dv, p in self.terms.items()})
        return Form(self.ctx, {dv: p * Q(scalar) for dv, p in self.terms.items()})

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, Form) and self.ctx == other.ctx and self.terms == other.terms

    def degrees(self) -> set[int]:
        return {len(dv) for dv in self.terms}

    def degree(self) -> int:
        degs = self.degrees()
        if len(degs) > 1:
            raise DegreeError(f"mixed degrees {degs}")
        return degs.pop() if degs else 0

    def component(self, r: int) -> "Form":
        return Form(self.ctx, {dv: p for dv, p in self.terms.items() if len(dv) == r})

    def __repr__(self):
        if not self.terms:
            return "0"
        names = self.ctx.names
        bits = []
        for dv, p in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])):
            w = "^".join(f"d{names[i]}" for i in dv)
            coeff = f"({p})"
            bits.append(f"{coeff}{'*' + w if w else ''}")
        return " + ".join(bits)


def _merge_wedge(a: tuple[int, ...], b: tuple[int, ...]):
    """Merge two strictly increasing index tuples; None if they collide."""
    if set(a) & set(b):
        return None, 0
    merged = tuple(sorted(a + b))
    sign = 1
    # count transpositions needed to sort the concatenation
    concat = a + b
    for i in range(len(concat)):
        for j in range(i + 1, len(concat)):
            if concat[i] > concat[j]:
                sign = -sign
    return merged, sign


def wedge(x: Form, y: Form) -> Form:
    """Graded-commutative exterior product."""
    x._chk(y)
    out: dict[tuple[int, ...], Poly] = {}
    for dv1, p1 in x.terms.items():
        for dv2, p2 in y.terms.items():
            merged, sign = _merge_wedge(dv1, dv2)
            if merged is None:
                continue
            contrib = p1 * p2 * sign
            s = out.get(merged, Poly.zero(x.ctx)) + contrib
            if s:
                out[merged] = s
            else:
                out.pop(merged, None)
    return Form(x.ctx, out)


def wedge_all(forms: Iterable[Form]) -> Form:
    forms = list(forms)
    if not forms:
        raise FormError("empty wedge")
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def d(a: Form) -> Form:
    """Formal exterior derivative, term by term."""
    out = Form.zero(a.ctx)
    for dv, p in a.terms.items():
        for i in range(a.ctx.nvars):
            dp = p.diff(i)
            if not dp:
                continue
            merged, sign = _merge_wedge((i,), dv)
            if merged is None:
                continue
            out = out + Form(a.ctx, {merged: dp * sign})
    return out


@dataclass(frozen=True)
class CoordMap:
    """Polynomial coordinate map, used contravariantly through `pullback`."""

    source: CoordSystem
    target: CoordSystem
    images: tuple[tuple[str, Poly], ...]  # target variable name -> Poly over source

    @classmethod
    def build(cls, source: CoordSystem, target: CoordSystem,
              images: Mapping[str, Poly]) -> "CoordMap":
        missing = [n for n in target.names if n not in images]
        if missing:
            raise ContextError(f"missing images for {missing}")
        return cls(source, target, tuple((n, images[n]) for n in target.names))

    @functools.cached_property
    def image_list(self) -> tuple[Poly, ...]:
        return tuple(p for _, p in self.images)

    @functools.cached_property
    def differential_images(self) -> tuple[Form, ...]:
        return tuple(d(Form.from_poly(p)) for p in self.image_list)


def pullback(m: CoordMap, a: Form) -> Form:
    """Substitute coefficients and map each dvar to d(its image)."""
    if a.ctx != m.target:
        raise ContextError("form context does not match the map's target")
    images = {i: p for i, p in enumerate(m.image_list)}
    out = Form.zero(m.source)
    for dv, p in a.terms.items():
        coeff = p.substitute(images, m.source)
        if not coeff:
            continue
        term = Form.from_poly(coeff)
        dead = False
        for i in dv:
            di = m.differential_images[i]
            if di.is_zero:
                dead = True
                break
            term = wedge(term, di)
        if not dead and term:
            out = out + term
    return out


@functools.lru_cache(maxsize=None)
def _elim_map(ctx: CoordSystem, drop_first: bool) -> CoordMap:
    """Map ctx -> ctx eliminating the last (or first) variable of each group."""
    images: dict[str, Poly] = {}
    for gvars in ctx.group_vars:
        drop = gvars[0] if drop_first else gvars[-1]
        rest = [i for i in gvars if i != drop]
        one_minus = Poly.const(ctx, 1)
        for i in rest:
            one_minus = one_minus - Poly.variable(ctx, i)
        images[ctx.names[drop]] = one_minus
        for i in rest:
            images[ctx.names[i]] = Poly.variable(ctx, i)
    return CoordMap.build(ctx, ctx, images)


def canonicalize(a: Form) -> Form:
    """Normal form: substitute the last variable of each group by 1 - rest."""
    return pullback(_elim_map(a.ctx, False), a)


def eliminate_first(a: Form) -> Form:
    """Chart used for integration and homotopy: drop each group's first variable."""
    return pullback(_elim_map(a.ctx, True), a)


def equal_mod_relations(a: Form, b: Form) -> bool:
    return canonicalize(a - b).is_zero


def restriction_map(ctx: CoordSystem, face_ctx: CoordSystem) -> CoordMap:
    """Coordinate restriction onto a face: dropped variables (and their
    differentials) go to zero, kept variables map to themselves."""
    images: dict[str, Poly] = {}
    for n in ctx.names:
        if n in face_ctx.index:
            images[n] = Poly.variable(face_ctx, face_ctx.index[n])
        else:
            images[n] = Poly.zero(face_ctx)
    return CoordMap.build(face_ctx, ctx, images)


def restrict_to_face(a: Form, face_ctx: CoordSystem) -> Form:
    """Restrict a form to the face described by `face_ctx`.

    Every group of `face_ctx` must be a sub-tuple of the matching group of
    the ambient context (same tags); missing variables are set to zero along
    with their differentials.
    """
    for tag, verts in face_ctx.groups:
        amb = dict(a.ctx.groups)
        if tag not in amb:
            raise ContextError(f"face group {tag} not present in ambient context")
        if not set(verts) <= set(amb[tag]):
            raise ContextError(f"face group {tag}:{verts} not inside {amb[tag]}")
    return pullback(restriction_map(a.ctx, face_ctx), a)


# ---------------------------------------------------------------------------
# Whitney forms
# ---------------------------------------------------------------------------

def group_whitney_extended(ctx: CoordSystem, group: int,
                           sub_vertices: tuple[int, ...]) -> Form:
    """q! sum_k (-1)^k x_k dx_0 ^ ... ^ dx_k-hat ^ ... ^ dx_q on a vertex
    subset of one coordinate group, read in the whole context."""
    tag = ctx.groups[group][0]
    idx = [ctx.var(tag, v) for v in sub_vertices]
    q = len(idx) - 1
    if q < 0:
        raise FormError("empty vertex subset")
    fact = 1
    for k in range(1, q + 1):
        fact *= k
    out = Form.zero(ctx)
    for k in range(q + 1):
        dvars = tuple(idx[:k] + idx[k + 1:])
        coeff = Poly.variable(ctx, idx[k]) * Q((-1) ** k * fact)
        wedge_sorted, sign = _sort_wedge(dvars)
        if wedge_sorted is None:
            continue
        out = out + Form(ctx, {wedge_sorted: coeff * sign})
    return out


def _sort_wedge(dvars: tuple[int, ...]):
    if len(set(dvars)) != len(dvars):
        return None, 0
    sign = 1
    lst = list(dvars)
    for i in range(len(lst)):
        for j in range(i + 1, len(lst)):
            if lst[i] > lst[j]:
                sign = -sign
    return tuple(sorted(lst)), sign


def group_whitney(ctx: CoordSystem, group: int) -> Form:
    tag, verts = ctx.groups[group]
    return group_whitney_extended(ctx, group, verts)


def whitney(s: Simplex) -> Form:
    """Whitney volume form of a simplex in its own context."""
    ctx = simplex_context(s)
    return group_whitney(ctx, 0)


def whitney_extended(face: Simplex, s: Simplex) -> Form:
    """The written formula of the face's Whitney form, read on the cell."""
    if not s.has_face(face):
        raise StructureError(f"{face} is not a face of {s}")
    ctx = simplex_context(s)
    return group_whitney_extended(ctx, 0, face.vertices)


def whitney_prism(p: Prism) -> Form:
    """Product Whitney form: wedge of the per-factor forms, factor order."""
    ctx = prism_context(p)
    return wedge_all(group_whitney(ctx, g) for g in range(len(p.factors)))


def whitney_prism_extended(ctx: CoordSystem, subs: Iterable[tuple[int, ...]]) -> Form:
    """Wedge over all groups of extended Whitney forms on given subsets."""
    return wedge_all(group_whitney_extended(ctx, g, tuple(sub))
                     for g, sub in enumerate(subs))


def whitney_relative(ctx: CoordSystem) -> Form:
    """Vertical Whitney form: wedge of the fiber groups' Whitney forms."""
    if not ctx.fiber_groups:
        return Form.const(ctx, 1)
    return wedge_all(group_whitney(ctx, g) for g in ctx.fiber_groups)


def whitney_relative_extended(ctx: CoordSystem,
                              fiber_subs: Iterable[tuple[int, ...]]) -> Form:
    """Vertical extension: wedge of per-fiber-group extended Whitney forms.

    `fiber_subs` lists one vertex subset per fiber group, in group order.
    Point subsets contribute the constant 1.
    """
    subs = list(fiber_subs)
    if len(subs) != len(ctx.fiber_groups):
        raise ContextError("need one vertex subset per fiber group")
    out = Form.const(ctx, 1)
    for g, sub in zip(ctx.fiber_groups, subs):
        out = wedge(out, group_whitney_extended(ctx, g, tuple(sub)))
    return out


def de_form(ctx: CoordSystem) -> Form:
    """Pullback of the base volume form: wedge of base-group Whitney forms."""
    if not ctx.base_groups:
        raise ContextError("context has no base group")
    return wedge_all(group_whitney(ctx, g) for g in ctx.base_groups)


def vertical_part(a: Form) -> Form:
    """Drop every term whose wedge touches a base-group variable."""
    base = set(a.ctx.base_groups)
    keep = {dv: p for dv, p in a.terms.items()
            if not any(a.ctx.group_of[i] in base for i in dv)}
    return Form(a.ctx, keep)


def is_fiberwise_zero(a: Form) -> bool:
    """A form is zero on every fiber iff it dies against the base volume."""
    return canonicalize(wedge(a, de_form(a.ctx))).is_zero


def relative_d(a: Form) -> Form:
    """Exterior derivative modulo forms vanishing fiberwise.

    The representative is the canonical form with no base differentials.
    """
    return vertical_part(canonicalize(d(a)))


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _dirichlet(exps: Iterable[int]) -> Fraction:
    """Integral of a monomial over the standard simplex in those variables."""
    exps = list(exps)
    num = 1
    for e in exps:
        for k in range(1, e + 1):
            num *= k
    den = 1
    for k in range(1, len(exps) + sum(exps) + 1):
        den *= k
    return Q(num, den)


def integrate_top_form(a: Form) -> Fraction:
    """Exact integral of a top-degree form over its cell.

    The parameter domain uses the variables left after eliminating each
    group's first variable, oriented by the stored vertex order; group
    blocks integrate factor-wise (Fubini).
    """
    c = eliminate_first(a)
    ctx = a.ctx
    full = tuple(i for gvars in ctx.group_vars for i in gvars[1:])
    total = Q(0)
    for dv, p in c.terms.items():
        if not p:
            continue
        if dv != full:
            raise DegreeError(
                f"not a top-degree form on the cell (term {dv}, expected {full})")
        for e, coeff in p.terms.items():
            block = Q(1)
            for gvars in ctx.group_vars:
                block *= _dirichlet(e[i] for i in gvars[1:])
            total += coeff * block
    return total


def integrate_fiber(a: Form) -> Poly:
    """Integrate a vertical top-degree form over the fiber; returns a
    polynomial in the base variables."""
    ctx = a.ctx
    if not ctx.base_groups:
        raise ContextError("context has no base group")
    # eliminate first variable of fiber groups only
    images: dict[str, Poly] = {n: Poly.variable(ctx, i) for n, i in ctx.index.items()}
    for g in ctx.fiber_groups:
        gvars = ctx.group_vars[g]
        rest = gvars[1:]
        one_minus = Poly.const(ctx, 1)
        for i in rest:
            one_minus = one_minus - Poly.variable(ctx, i)
        images[ctx.names[gvars[0]]] = one_minus
    m = CoordMap.build(ctx, ctx, images)
    c = pullback(m, a)
    fiber_full = tuple(i for g in ctx.fiber_groups for i in ctx.group_vars[g][1:])
    base_vars = set(i for g in ctx.base_groups for i in ctx.group_vars[g])
    total = Poly.zero(ctx)
    for dv, p in c.terms.items():
        if dv != fiber_full:
            raise DegreeError("not a fiberwise top-degree vertical form")
        for e, coeff in p.terms.items():
            if any(e[i] and i not in base_vars and i not in fiber_full for i in range(ctx.nvars)):
                raise DegreeError("coefficient depends on an eliminated variable")
            block = Q(1)
            for g in ctx.fiber_groups:
                block *= _dirichlet(e[i] for i in ctx.group_vars[g][1:])
            mono = {tuple(n if i in base_vars else 0 for i, n in enumerate(e)): coeff * block}
            total = total + Poly(ctx, mono)
    return total


# ---------------------------------------------------------------------------
# Homotopy (cone) operator
# ---------------------------------------------------------------------------

def poincare_primitive(a: Form, fiber_only: bool = False) -> Form:
    """Primitive of a closed form of degree >= 1 on a star-shaped chart.

    Works in the chart that drops each group's first variable (the cell is
    then a product of standard simplices, star-shaped around the origin =
    the cell's first vertices).  With `fiber_only`, base variables are
    treated as parameters and the homotopy contracts fiber directions only;
    the input must then be fiberwise closed and purely vertical.
    """
    ctx = a.ctx
    if fiber_only:
        images: dict[str, Poly] = {n: Poly.variable(ctx, i) for n, i in ctx.index.items()}
        for g in ctx.fiber_groups:
            gvars = ctx.group_vars[g]
            one_minus = Poly.const(ctx, 1)
            for i in gvars[1:]:
                one_minus = one_minus - Poly.variable(ctx, i)
            images[ctx.names[gvars[0]]] = one_minus
        c = pullback(CoordMap.build(ctx, ctx, images), a)
        cone_vars = set(i for g in ctx.fiber_groups for i in ctx.group_vars[g][1:])
        check = vertical_part(canonicalize(d(c)))
    else:
        c = eliminate_first(a)
        cone_vars = set(i for gvars in ctx.group_vars for i in gvars[1:])
        check = d(c)
    if not check.is_zero:
        raise FormError("form is not closed; no primitive exists")
    out = Form.zero(ctx)
    for dv, p in c.terms.items():
        r = len([i for i in dv if i in cone_vars])
        if r == 0:
            if not dv:
                raise DegreeError("cannot take a primitive of a 0-form part")
            raise FormError("vertical homotopy requires vertical terms")
        for m, pm in p.homogeneous_parts(sorted(cone_vars)).items():
            if not pm:
                continue
            scale = Q(1, m + r)
            for k, i in enumerate(dv):
                if i not in cone_vars:
                    continue
                rest = dv[:k] + dv[k + 1:]
                sign = (-1) ** k
                coeff = pm * Poly.variable(ctx, i) * scale * sign
                out = out + Form(ctx, {rest: coeff})
    return out


def whitney_antiboundary(s: Simplex) -> Form:
    """(1/(r+1)) * alternating sum of extended facet Whitney forms; its
    exterior derivative is the cell's Whitney form."""
    r = s.dim
    if r < 1:
        raise DegreeError("needs dim >= 1")
    out = Form.zero(simplex_context(s))
    for i in range(len(s.vertices)):
        face = s.facet_omitting(i)
        out = out + whitney_extended(face, s) * Q((-1) ** i, r + 1)
    return out
