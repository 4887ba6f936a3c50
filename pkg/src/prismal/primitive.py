"""Relative primitives of fiberwise-exact polynomial forms.

Pipeline, per base simplex tau and maximal source simplex sigma over it:

1. extract the fiberwise coefficient family A_phi of the input form by
   pairing with the constant fiber direction of each relative face phi;
2. solve the homothety ODE to get the C coefficients, one per codim-1
   subface of each phi over a base vertex;
3. assemble the candidate primitive on the trivial prism, compare its
   relative differential with the extracted fiber form, and repair the
   (fiberwise-exact) defect with a cone primitive per prism, matched
   across prisms over the open base simplex;
4. check the residual base-volume ^ (pullback(input) - d(primitive)) = 0,
   descend the primitive to the raw sheaf, and compare specializations
   against the pipelines of the base faces.

All the exact arithmetic is rational; the only floating point lives in the
optional shrinking-average oracle for the extracted coefficients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .mesh import Prism, Simplex, SimplicialMorphism, reorder_sign
from .forms import (CoordMap, CoordSystem, Form, Poly, canonicalize, d,
                    de_form, equal_mod_relations, pi_context,
                    poincare_primitive, pullback, restrict_to_face,
                    simplex_context, vertical_part, wedge,
                    whitney_relative_extended)
from .sheaf import pi_prism, psi_coordinate_map

Q = Fraction


class PrimitiveError(ValueError):
    pass


class ExactnessError(PrimitiveError):
    """The input form is not exact along the fibers."""


class DecompositionError(PrimitiveError):
    pass


def _factorial(n: int) -> int:
    return math.factorial(n)


# ---------------------------------------------------------------------------
# Homothety ODE
# ---------------------------------------------------------------------------

def ode_solve(B: Poly, r: int, vars_: Iterable[int] | None = None) -> Poly:
    """Unique polynomial solution of E + (1/r) sum_i u_i dE/du_i = B.

    Scaling-averaging acts on `vars_` (default: all variables); any other
    variables are parameters.  A component of degree m in the scaled
    variables picks up the factor r/(r+m), the exact value of the averaged
    homothety integral on that component.
    """
    if r < 1:
        raise PrimitiveError("degree parameter must be >= 1")
    vs = tuple(vars_) if vars_ is not None else tuple(range(B.ctx.nvars))
    out = Poly.zero(B.ctx)
    for m, part in B.homogeneous_parts(vs).items():
        out = out + part * Q(r, r + m)
    return out


def ode_residual(E: Poly, B: Poly, r: int, vars_: Iterable[int] | None = None) -> Poly:
    vs = tuple(vars_) if vars_ is not None else tuple(range(B.ctx.nvars))
    acc = E
    for i in vs:
        acc = acc + Poly.variable(B.ctx, i) * E.diff(i) * Q(1, r)
    return acc - B


# ---------------------------------------------------------------------------
# Relative faces and the direction pairing
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class RelFace:
    """A face of sigma with image tau, stored with its fiber blocks."""

    vertices: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]

    @property
    def rel_dim(self) -> int:
        return sum(len(b) - 1 for b in self.blocks)

    def block_dims(self) -> tuple[int, ...]:
        return tuple(len(b) - 1 for b in self.blocks)


def relative_faces(f: SimplicialMorphism, sigma: Simplex, r: int) -> list[RelFace]:
    """Faces of sigma with full image and relative dimension r, each taken
    with the subsequence orientation and its fiber blocks."""
    fibers = f.fibers(sigma)
    out = []
    choices = []
    for fib in fibers:
        opts = []
        nv = len(fib.vertices)
        for k in range(1, nv + 1):
            opts.extend(itertools.combinations(fib.vertices, k))
        choices.append(opts)
    for combo in itertools.product(*choices):
        if sum(len(b) - 1 for b in combo) != r:
            continue
        chosen = {v for b in combo for v in b}
        verts = tuple(v for v in sigma.vertices if v in chosen)
        out.append(RelFace(verts, tuple(combo)))
    return sorted(out)


def _det(mat: list[list[Fraction]]) -> Fraction:
    n = len(mat)
    if n == 0:
        return Q(1)
    m = [row[:] for row in mat]
    det = Q(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            return Q(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = Q(1) / m[col][col]
        for r in range(col + 1, n):
            if m[r][col]:
                fac = m[r][col] * inv
                m[r] = [a - fac * b for a, b in zip(m[r], m[col])]
    return det


def face_direction_vectors(ctx: CoordSystem, phi: RelFace) -> list[tuple[int, int]]:
    """Constant fiber-tangent frame of phi: per block, the differences from
    the block's first vertex, as (plus_var, minus_var) index pairs."""
    vecs = []
    for block in phi.blocks:
        base = ctx.var("l", block[0])
        for w in block[1:]:
            vecs.append((ctx.var("l", w), base))
    return vecs


def pair_with_face(eta: Form, phi: RelFace) -> Poly:
    """Contract an r-form with the fiber r-frame of phi (exact, constant)."""
    ctx = eta.ctx
    vecs = face_direction_vectors(ctx, phi)
    r = len(vecs)
    out = Poly.zero(ctx)
    for dv, p in eta.terms.items():
        if len(dv) != r:
            continue
        mat = [[Q((i == plus) - (i == minus)) for (plus, minus) in vecs] for i in dv]
        det = _det(mat)
        if det:
            out = out + p * det
    return out


# ---------------------------------------------------------------------------
# Coefficient extraction
# ---------------------------------------------------------------------------

@dataclass
class FiberwiseDecomposition:
    """Coefficient family {A_phi} of an r-form on sigma over tau.

    `A` holds the working coefficients (the combination below reproduces the
    fiber part of the pulled-back form); `A_raw` the shrinking-average
    normalization, related by sign * (r+s)!/(prod |phi_j|! s!)."""

    sigma: Simplex
    tau: Simplex
    degree: int
    faces: tuple[RelFace, ...]
    A: dict[RelFace, Poly]
    A_raw: dict[RelFace, Poly]
    signs: dict[RelFace, int]
    norms: dict[RelFace, Fraction]


def face_sign(f: SimplicialMorphism, phi: RelFace) -> int:
    """Orientation bookkeeping sign of a relative face: block-dimension
    staircase plus the parity of the grouping permutation."""
    dims = phi.block_dims()
    s = len(dims) - 1
    exponent = sum((s - k) * dims[k] for k in range(s))
    grouped = tuple(v for b in phi.blocks for v in b)
    return (-1) ** exponent * reorder_sign(phi.vertices, grouped)


def face_norm(phi: RelFace) -> Fraction:
    """(r+s)! / (prod |phi_j|! * s!) for the face's block dimensions."""
    dims = phi.block_dims()
    r, s = sum(dims), len(dims) - 1
    den = _factorial(s)
    for dd in dims:
        den *= _factorial(dd)
    return Q(_factorial(r + s), den)


def extract_A(eta: Form, f: SimplicialMorphism, sigma: Simplex,
              r: int | None = None) -> FiberwiseDecomposition:
    """Canonical fiberwise coefficients of an r-form on sigma.

    A_phi is the contraction of eta with the constant fiber frame of phi,
    divided by the product of the block factorials; this is the pointwise
    value of the shrinking-average limit, up to the stated normalization.
    """
    tau = f.image(sigma)
    if r is None:
        nonzero = sorted(deg for deg in eta.degrees())
        if len(nonzero) != 1:
            raise DecompositionError(f"mixed degrees {nonzero}; pass r explicitly")
        r = nonzero[0]
    d_rel = sum(len(fib.vertices) - 1 for fib in f.fibers(sigma))
    if r > d_rel:
        raise DecompositionError(
            f"degree {r} exceeds the relative dimension {d_rel} of {sigma}")
    faces = relative_faces(f, sigma, r)
    A: dict[RelFace, Poly] = {}
    A_raw: dict[RelFace, Poly] = {}
    signs: dict[RelFace, int] = {}
    norms: dict[RelFace, Fraction] = {}
    for phi in faces:
        fact = Q(1)
        for dd in phi.block_dims():
            fact *= _factorial(dd)
        a = pair_with_face(eta, phi) * (Q(1) / fact)
        sg, nm = face_sign(f, phi), face_norm(phi)
        A[phi] = a
        A_raw[phi] = a * Q(sg) * (Q(1) / nm)
        signs[phi] = sg
        norms[phi] = nm
    return FiberwiseDecomposition(sigma, tau, r, tuple(faces), A, A_raw, signs, norms)


def t_monomial(pctx: CoordSystem, tau: Simplex, dims: Iterable[int]) -> Poly:
    out = Poly.const(pctx, 1)
    for y, dd in zip(tau.vertices, dims):
        out = out * Poly.variable(pctx, pctx.var("t", y)) ** dd
    return out


def compose_psi(poly: Poly, psi: CoordMap) -> Poly:
    """Substitute lambda_i = t_j mu_{j,i} into a simplex-side polynomial."""
    images = {i: p for i, p in enumerate(psi.image_list)}
    return poly.substitute(images, psi.source)


def whitney_combination(dec: FiberwiseDecomposition, f: SimplicialMorphism) -> Form:
    """The t-weighted relative Whitney combination of a coefficient family,
    as a form on the trivial prism of sigma."""
    sigma, tau = dec.sigma, dec.tau
    psi = psi_coordinate_map(f, sigma)
    pctx = psi.source
    out = Form.zero(pctx)
    for phi in dec.faces:
        if not dec.A[phi]:
            continue
        coeff = compose_psi(dec.A[phi], psi)
        t_mon = t_monomial(pctx, tau, phi.block_dims())
        w = whitney_relative_extended(pctx, phi.blocks)
        out = out + w * (coeff * t_mon)
    return out


def decomposition_residual(eta: Form, dec: FiberwiseDecomposition,
                    f: SimplicialMorphism) -> Form:
    """base volume ^ (pullback(eta) - Whitney combination), canonicalized."""
    psi = psi_coordinate_map(f, dec.sigma)
    lhs = pullback(psi, eta)
    combo = whitney_combination(dec, f)
    return canonicalize(wedge(de_form(psi.source), lhs - combo))


# ---------------------------------------------------------------------------
# The C coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class FaceDrop:
    """A codim-1 subface gamma of phi over a base vertex: phi minus one
    vertex of the block over that vertex."""

    phi: RelFace
    j: int
    removed: int

    def gamma_blocks(self) -> tuple[tuple[int, ...], ...]:
        out = []
        for k, b in enumerate(self.phi.blocks):
            out.append(tuple(v for v in b if not (k == self.j and v == self.removed)))
        return tuple(out)

    def gamma_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in self.phi.vertices if v != self.removed)


def admissible_drops(phi: RelFace) -> list[FaceDrop]:
    """All codim-1 subfaces with full image: one vertex removed from a
    block of positive dimension."""
    out = []
    for j, b in enumerate(phi.blocks):
        if len(b) >= 2:
            for v in b:
                out.append(FaceDrop(phi, j, v))
    return out


def _free_chart(pctx: CoordSystem, f: SimplicialMorphism, sigma: Simplex,
                drop: "FaceDrop") -> tuple[CoordMap, list[int]]:
    """Chart of the trivial prism adapted to a subface pair (phi, gamma).

    In the removed vertex's block, that vertex's coordinate is eliminated;
    in every other fiber block a coordinate outside gamma is eliminated
    when one exists, otherwise the block's last one.  Returns the chart map
    and the surviving gamma coordinates (the scaling directions).
    """
    fibers = f.fibers(sigma)
    images: dict[str, Poly] = {n: Poly.variable(pctx, i)
                               for n, i in pctx.index.items()}
    eliminated: set[int] = set()
    gblocks = drop.gamma_blocks()
    for j, fib in enumerate(fibers):
        gvars = [pctx.var(f"m:{j}", v) for v in fib.vertices]
        if j == drop.j:
            elim = pctx.var(f"m:{j}", drop.removed)
        else:
            outside = [v for v in fib.vertices if v not in gblocks[j]]
            elim = pctx.var(f"m:{j}", outside[-1] if outside else gblocks[j][-1])
        one_minus = Poly.const(pctx, 1)
        for i in gvars:
            if i != elim:
                one_minus = one_minus - Poly.variable(pctx, i)
        images[pctx.names[elim]] = one_minus
        eliminated.add(elim)
    chart = CoordMap.build(pctx, pctx, images)
    scaled = [pctx.var(f"m:{j}", v)
              for j, b in enumerate(gblocks) for v in b
              if pctx.var(f"m:{j}", v) not in eliminated]
    return chart, scaled


def assemble_C(dec: FiberwiseDecomposition, f: SimplicialMorphism
               ) -> dict[FaceDrop, Poly]:
    """Homothety solutions C~ per (phi, gamma), on the trivial prism.

    Each C~ is a polynomial in the base variables and the fiber coordinates
    of gamma, independent of the removed vertex's coordinate, solving the
    averaged-scaling equation with right side (A_phi o psi) / n(phi); the
    count n(phi) runs over all admissible subfaces of phi.
    """
    r = dec.degree
    if r < 1:
        raise PrimitiveError("relative degree must be >= 1")
    psi = psi_coordinate_map(f, dec.sigma)
    pctx = psi.source
    out: dict[FaceDrop, Poly] = {}
    for phi in dec.faces:
        drops = admissible_drops(phi)
        n = len(drops)
        if n == 0:
            raise DecompositionError(f"no admissible subface for {phi}")
        if not dec.A[phi]:
            for drop in drops:
                out[drop] = Poly.zero(pctx)
            continue
        a_psi = compose_psi(dec.A[phi], psi)
        for drop in drops:
            chart, scaled = _free_chart(pctx, f, dec.sigma, drop)
            flat = a_psi.substitute(
                {i: p for i, p in enumerate(chart.image_list)}, pctx)
            q = drop.phi.blocks[drop.j].index(drop.removed)
            out[drop] = ode_solve(flat, r, scaled) * Q((-1) ** q, n)
    return out


def c_part_form(dec: FiberwiseDecomposition, C: dict[FaceDrop, Poly],
                f: SimplicialMorphism) -> Form:
    """sum over (phi, gamma) of t^{|phi|} C~ w(pi(gamma); pi(sigma))."""
    psi = psi_coordinate_map(f, dec.sigma)
    pctx = psi.source
    out = Form.zero(pctx)
    for drop, ctil in C.items():
        if not ctil:
            continue
        t_mon = t_monomial(pctx, dec.tau, drop.phi.block_dims())
        w = whitney_relative_extended(pctx, drop.gamma_blocks())
        out = out + w * (ctil * t_mon)
    return out


# ---------------------------------------------------------------------------
# Vertical gluing and assembly
# ---------------------------------------------------------------------------

def fiber_defect(omega1: Form, cpart: Form) -> Form:
    """Vertical part of omega1 - d(C part); what the cone repair must kill."""
    return vertical_part(canonicalize(omega1 - d(cpart)))


def solve_vertical_gluing(b: Form, cpart: Form) -> Form:
    """Per-prism repair: closes the gap between a given fiber primitive `b`
    and the C part (both on the same trivial-prism context).

    Returns the cone primitive of the vertical difference (the fiberwise
    correction whose fiber differential restores `b`'s class); at the
    lowest degree the difference itself is returned, since it is fiberwise
    constant.  Raises ExactnessError when the difference is not fiberwise
    closed.
    """
    diff = vertical_part(canonicalize(b - cpart))
    if diff.is_zero:
        return Form.zero(b.ctx)
    closed = vertical_part(canonicalize(d(diff)))
    if not closed.is_zero:
        raise ExactnessError(f"vertical defect is not fiberwise closed: {closed}")
    degs = diff.degrees()
    if degs == {0}:
        # nothing below degree 0; the difference itself is the correction
        return diff
    return poincare_primitive(diff, fiber_only=True)


def _is_base_function(form: Form) -> bool:
    """True for 0-forms whose canonical coefficient uses base variables only."""
    c = canonicalize(form)
    base_vars = {i for g in form.ctx.base_groups for i in form.ctx.group_vars[g]}
    for dv, p in c.terms.items():
        if dv:
            return False
        for e in p.terms:
            if any(n and i not in base_vars for i, n in enumerate(e)):
                return False
    return True


@dataclass
class PrismData:
    sigma: Simplex
    prism: Prism
    pctx: CoordSystem
    psi: CoordMap
    eta: Form
    decomposition: FiberwiseDecomposition
    C: dict[FaceDrop, Poly]
    omega1: Form
    cpart: Form
    correction: Form
    H: Form


@dataclass
class RelativePrimitive:
    """Assembled solution over one base simplex plus its descent data."""

    tau: Simplex
    prisms: dict[Simplex, PrismData]
    H_S: dict[Simplex, tuple[Form, tuple[int, ...]]] = field(default_factory=dict)
    n_counts: dict[RelFace, int] = field(default_factory=dict)

    def residuals(self) -> dict[Simplex, Form]:
        out = {}
        for sig, pd in self.prisms.items():
            out[sig] = canonicalize(
                wedge(de_form(pd.pctx), pullback(pd.psi, pd.eta) - d(pd.H)))
        return out


def maximal_over(f: SimplicialMorphism, tau: Simplex) -> list[Simplex]:
    """Maximal source cells with image exactly tau."""
    over = [s for s in f.preimage_cells(tau) if f.image(s) == tau]
    return sorted(s for s in over
                  if not any(s != t and s.vset < t.vset for t in over))


def build_primitive_over(f: SimplicialMorphism, omega: dict[Simplex, Form],
                         tau: Simplex, r: int = 1) -> RelativePrimitive:
    """Run the pipeline over one base simplex.

    `omega` gives the input form on each maximal source simplex, in its
    simplex context; restrictions are taken automatically for cells over
    tau that only appear as faces.
    """
    sigmas = maximal_over(f, tau)
    if not sigmas:
        raise PrimitiveError(f"no source cells over {tau}")
    prisms: dict[Simplex, PrismData] = {}
    n_counts: dict[RelFace, int] = {}
    for sigma in sigmas:
        eta = restrict_input(omega, sigma)
        dec = extract_A(eta, f, sigma, r)
        res = decomposition_residual(eta, dec, f)
        if not res.is_zero:
            raise DecompositionError(
                f"input on {sigma} has mixed fiber degree; residual {res}")
        C = assemble_C(dec, f)
        for phi in dec.faces:
            n_counts[phi] = len(admissible_drops(phi))
        psi = psi_coordinate_map(f, sigma)
        omega1 = whitney_combination(dec, f)
        cpart = c_part_form(dec, C, f)
        delta = fiber_defect(omega1, cpart)
        if delta.is_zero:
            corr = Form.zero(psi.source)
        else:
            closed = vertical_part(canonicalize(d(delta)))
            if not closed.is_zero:
                raise ExactnessError(
                    f"fiber defect on {sigma} is not closed: d_e residual {closed}")
            corr = poincare_primitive(delta, fiber_only=True)
        H = cpart + corr
        prisms[sigma] = PrismData(sigma, pi_prism(f, sigma), psi.source, psi,
                                  eta, dec, C, omega1, cpart, corr, H)
    _match_across_prisms(f, tau, prisms, r)
    prim = RelativePrimitive(tau, prisms, n_counts=n_counts)
    for sigma, pd in prisms.items():
        prim.H_S[sigma] = descend_form(pd.H, pd.pctx)
    return prim


def restrict_input(omega: dict[Simplex, Form], sigma: Simplex) -> Form:
    """Input form on sigma: given directly, or restricted from a carrier."""
    if sigma in omega:
        return omega[sigma]
    for big, form in sorted(omega.items()):
        if big.has_face(sigma):
            return restrict_to_face(form, simplex_context(sigma))
    raise PrimitiveError(f"no input form covers {sigma}")


def validate_input_family(omega: dict[Simplex, Form]) -> None:
    """Input forms must restrict compatibly to shared faces.

    An incoherent family is not a differential form on the complex; it
    would fail the gluing steps much later with an opaque message.
    """
    cells = sorted(omega)
    for i, s1 in enumerate(cells):
        if omega[s1].ctx != simplex_context(s1):
            raise PrimitiveError(f"form on {s1} is not in its simplex context")
        for s2 in cells[i + 1:]:
            common = tuple(v for v in s1.vertices if v in s2.vset)
            if not common:
                continue
            fctx = simplex_context(Simplex(common))
            r1 = restrict_to_face(omega[s1], fctx)
            r2 = restrict_to_face(omega[s2], fctx)
            if not equal_mod_relations(r1, r2):
                raise PrimitiveError(
                    f"input forms on {s1} and {s2} disagree on their "
                    f"common face {common}")


def _match_across_prisms(f: SimplicialMorphism, tau: Simplex,
                         prisms: dict[Simplex, PrismData], r: int) -> None:
    """Adjust the per-prism corrections so candidates agree on the shared
    cells over the open base simplex; inconsistent cycles mean the input
    was not fiberwise exact (the repair has a monodromy obstruction)."""
    sigmas = sorted(prisms)
    edges = []
    for i, s1 in enumerate(sigmas):
        for s2 in sigmas[i + 1:]:
            inter = Simplex(tuple(v for v in s1.vertices if v in s2.vset))
            if inter.is_empty or f.image(inter) != tau:
                continue
            edges.append((s1, s2, inter))
    if r != 1 or not edges:
        _verify_overlaps(f, tau, prisms, edges)
        return
    # spanning-tree matching of the fiberwise-constant ambiguity
    anchored = {sigmas[0]}
    shift: dict[Simplex, Form] = {sigmas[0]: Form.zero(prisms[sigmas[0]].pctx)}
    changed = True
    while changed:
        changed = False
        for s1, s2, inter in edges:
            known, new = None, None
            if s1 in anchored and s2 not in anchored:
                known, new = s1, s2
            elif s2 in anchored and s1 not in anchored:
                known, new = s2, s1
            else:
                continue
            diff = _overlap_difference(f, prisms[known], prisms[new], inter)
            if diff is None:
                continue
            # promote the base-variable function from the shared context
            pd = prisms[new]
            lifted = _lift_base_function(diff, pd.pctx)
            pd.H = pd.H + lifted
            pd.correction = pd.correction + lifted
            anchored.add(new)
            changed = True
    _verify_overlaps(f, tau, prisms, edges)


def _overlap_difference(f, pd_known: PrismData, pd_new: PrismData,
                        inter: Simplex) -> Form | None:
    """H_known - H_new restricted to the shared cell; must be a function of
    the base variables only (the fiberwise-constant ambiguity)."""
    shared = pi_prism(f, inter)
    sub = pi_context(shared.factors[0], shared.factors[1:])
    h1 = restrict_to_face(pd_known.H, sub)
    h2 = restrict_to_face(pd_new.H, sub)
    diff = canonicalize(h1 - h2)
    if diff.is_zero:
        return None
    if not _is_base_function(diff):
        raise ExactnessError(
            f"overlap mismatch on {inter} is not fiberwise constant: {diff}")
    return diff


def _lift_base_function(diff: Form, pctx: CoordSystem) -> Form:
    """Reinterpret a base-variable function on a shared cell in the bigger
    trivial-prism context (the base groups coincide)."""
    out = Form.zero(pctx)
    for dv, p in canonicalize(diff).terms.items():
        if dv:
            raise PrimitiveError("expected a 0-form")
        out = out + Form.from_poly(p.map_context(pctx))
    return out


def _verify_overlaps(f, tau, prisms, edges) -> None:
    for s1, s2, inter in edges:
        shared = pi_prism(f, inter)
        sub = pi_context(shared.factors[0], shared.factors[1:])
        h1 = restrict_to_face(prisms[s1].H, sub)
        h2 = restrict_to_face(prisms[s2].H, sub)
        if not canonicalize(h1 - h2).is_zero:
            raise ExactnessError(
                f"primitive candidates disagree on {inter}; "
                "the input is not fiberwise exact over the open base cell")


def assemble_H(cpart: Form, correction: Form) -> tuple[Form, tuple[Form, tuple[int, ...]]]:
    """Full primitive on one trivial prism plus its descent data.

    The primitive is the C part plus the gluing correction; the second
    return value is the cleared-denominator form on the simplex side whose
    blow-down pullback reproduces it.
    """
    H = cpart + correction
    return H, descend_form(H, H.ctx)


# ---------------------------------------------------------------------------
# Descent to the raw sheaf
# ---------------------------------------------------------------------------

def descend_form(H: Form, pctx: CoordSystem) -> tuple[Form, tuple[int, ...]]:
    """Clear the blow-down substitution mu = lambda/u, t = u.

    Returns (numerator N over the simplex context, exponents m per fiber
    group) with pullback(psi, N) = t^m * H modulo the relations: the
    simplex-side form N / prod u_j^{m_j} pulls back to H.
    """
    groups = pctx.groups
    base_tag, base_verts = groups[0]
    fiber_groups = groups[1:]
    all_vertices = tuple(v for _, verts in fiber_groups for v in verts)
    sctx = simplex_context(Simplex(all_vertices))

    def u_poly(j: int) -> Poly:
        out = Poly.zero(sctx)
        for v in fiber_groups[j][1]:
            out = out + Poly.variable(sctx, sctx.var("l", v))
        return out

    def du_form(j: int) -> Form:
        out = Form.zero(sctx)
        for v in fiber_groups[j][1]:
            out = out + Form.d_var(sctx, sctx.var("l", v))
        return out

    us = [u_poly(j) for j in range(len(fiber_groups))]
    dus = [du_form(j) for j in range(len(fiber_groups))]
    nfib = len(fiber_groups)

    # var index in pctx -> (kind, data)
    kind: dict[int, tuple[str, int]] = {}
    for j, y in enumerate(base_verts):
        kind[pctx.var(base_tag, y)] = ("t", j)
    for j, (tag, verts) in enumerate(fiber_groups):
        for v in verts:
            kind[pctx.index[f"{tag}:{v}"]] = ("mu", j)

    mu_vertex: dict[int, int] = {}
    for j, (tag, verts) in enumerate(fiber_groups):
        for v in verts:
            mu_vertex[pctx.index[f"{tag}:{v}"]] = v

    by_denominator: dict[tuple[int, ...], Form] = {}

    def add(den: tuple[int, ...], form: Form):
        if den in by_denominator:
            by_denominator[den] = by_denominator[den] + form
        elif form:
            by_denominator[den] = form

    for dv, p in H.terms.items():
        for e, c in p.terms.items():
            den = [0] * nfib
            num = Poly.const(sctx, c)
            for i, n in enumerate(e):
                if not n:
                    continue
                k, j = kind[i]
                if k == "t":
                    num = num * us[j] ** n
                else:
                    num = num * Poly.variable(sctx, sctx.var("l", mu_vertex[i])) ** n
                    den[j] += n
            term_form = Form.from_poly(num)
            for i in dv:
                k, j = kind[i]
                if k == "t":
                    term_form = wedge(term_form, dus[j])
                else:
                    lam = Poly.variable(sctx, sctx.var("l", mu_vertex[i]))
                    dlam = Form.d_var(sctx, sctx.var("l", mu_vertex[i]))
                    piece = dlam * us[j] - dus[j] * lam
                    den[j] += 2
                    term_form = wedge(term_form, piece)
            add(tuple(den), term_form)

    if not by_denominator:
        return Form.zero(sctx), (0,) * nfib
    m = tuple(max(dd[j] for dd in by_denominator) for j in range(nfib))
    out = Form.zero(sctx)
    for den, form in by_denominator.items():
        scale = Poly.const(sctx, 1)
        for j in range(nfib):
            scale = scale * us[j] ** (m[j] - den[j])
        out = out + form * scale
    return out, m


def check_descent(H: Form, pctx: CoordSystem, psi: CoordMap,
                  descended: tuple[Form, tuple[int, ...]]) -> bool:
    """pullback of the descended numerator equals t^m * H, canonically."""
    N, m = descended
    lhs = pullback(psi, N)
    t_mon = Poly.const(pctx, 1)
    base_tag, base_verts = pctx.groups[0]
    # the block sum u_j pulls back to t_j (times a relation unit)
    for j, mj in enumerate(m):
        t_mon = t_mon * Poly.variable(pctx, pctx.var(base_tag, base_verts[j])) ** mj
    return equal_mod_relations(lhs, H * t_mon)


# ---------------------------------------------------------------------------
# Horizontal specialization
# ---------------------------------------------------------------------------

def specialization_chart(f: SimplicialMorphism, sigma: Simplex,
                         tau_face: Simplex) -> CoordMap:
    """Inclusion of the trivial prism of sigma|tau' into that of sigma:
    kept base variables map to themselves, lost ones to zero, kept fiber
    blocks match up, and lost blocks sit at their barycenters."""
    tau = f.image(sigma)
    sigma_f = f.restriction_to(sigma, tau_face)
    src = pi_context(f.image(sigma_f), f.fibers(sigma_f))
    dst = pi_context(tau, f.fibers(sigma))
    keep = [j for j, y in enumerate(tau.vertices) if y in tau_face.vset]
    renumber = {j: k for k, j in enumerate(keep)}
    images: dict[str, Poly] = {}
    for y in tau.vertices:
        name = f"t:{y}"
        if y in tau_face.vset:
            images[name] = Poly.variable(src, src.var("t", y))
        else:
            images[name] = Poly.zero(src)
    for j, fib in enumerate(f.fibers(sigma)):
        for v in fib.vertices:
            name = f"m:{j}:{v}"
            if j in renumber:
                images[name] = Poly.variable(src, src.var(f"m:{renumber[j]}", v))
            else:
                images[name] = Poly.const(src, Q(1, len(fib.vertices)))
    return CoordMap.build(src, dst, images)


@dataclass
class HorizontalReport:
    tau: Simplex
    tau_face: Simplex
    vanished_terms: int
    surviving_terms: int
    matches: dict[Simplex, bool]

    @property
    def ok(self) -> bool:
        return all(self.matches.values())


def check_horizontal(f: SimplicialMorphism, omega: dict[Simplex, Form],
                     prim: RelativePrimitive, tau_face: Simplex,
                     r: int = 1) -> HorizontalReport:
    """Compare the specialized primitive with the one built over the face.

    Terms whose t-monomial involves a lost vertex vanish on the face; the
    surviving part must coincide with the face pipeline's primitive.
    """
    tau = prim.tau
    prim_face = build_primitive_over(f, omega, tau_face, r)
    vanished = surviving = 0
    matches: dict[Simplex, bool] = {}
    for sigma, pd in prim.prisms.items():
        for drop in pd.C:
            dims = drop.phi.block_dims()
            lost = [dims[j] for j, y in enumerate(tau.vertices)
                    if y not in tau_face.vset]
            if any(dd > 0 for dd in lost):
                vanished += 1
            else:
                surviving += 1
        sigma_f = f.restriction_to(sigma, tau_face)
        if sigma_f.is_empty or f.image(sigma_f) != tau_face:
            continue
        chart = specialization_chart(f, sigma, tau_face)
        specialized = pullback(chart, pd.H)
        target_sigma = next((s for s in prim_face.prisms
                             if s.vset == sigma_f.vset), None)
        if target_sigma is None:
            # sigma|tau' is a face of a bigger cell over tau'; restrict it
            carrier = next(s for s in prim_face.prisms
                           if sigma_f.vset <= s.vset)
            chart2 = specialization_chart(f, carrier, tau_face)
            sub = pi_context(tau_face, f.fibers(sigma_f))
            direct = restrict_to_face(prim_face.prisms[carrier].H, sub)
            matches[sigma] = equal_mod_relations(
                restrict_to_face(specialized, sub), direct)
        else:
            direct = prim_face.prisms[target_sigma].H
            matches[sigma] = equal_mod_relations(specialized, direct)
    return HorizontalReport(tau, tau_face, vanished, surviving, matches)


# ---------------------------------------------------------------------------
# End-to-end driver and the closing residual
# ---------------------------------------------------------------------------

@dataclass
class PrimitiveResult:
    primitives: dict[Simplex, RelativePrimitive]
    horizontal: list[HorizontalReport]

    def all_residuals_zero(self) -> bool:
        return all(form.is_zero
                   for prim in self.primitives.values()
                   for form in prim.residuals().values())

    def horizontal_ok(self) -> bool:
        return all(rep.ok for rep in self.horizontal)


def verify_theodg(f: SimplicialMorphism, omega: dict[Simplex, Form],
                  prim: RelativePrimitive) -> dict[Simplex, Form]:
    """Residual base-volume ^ (psi*omega - dH) per prism; empty = success."""
    out = {}
    for sigma, pd in prim.prisms.items():
        res = canonicalize(wedge(de_form(pd.pctx),
                                 pullback(pd.psi, pd.eta) - d(pd.H)))
        if not res.is_zero:
            out[sigma] = res
    return out


def build_relative_primitive(f: SimplicialMorphism, omega: dict[Simplex, Form],
                             r: int = 1, check_horizontal_faces: bool = True
                             ) -> PrimitiveResult:
    """Run the pipeline over every base simplex with sources over it."""
    validate_input_family(omega)
    prims: dict[Simplex, RelativePrimitive] = {}
    for tau in sorted(f.target.cells):
        tops = maximal_over(f, tau)
        if not tops:
            continue
        d_rel = max(sum(len(fib.vertices) - 1 for fib in f.fibers(s)) for s in tops)
        if d_rel < r:
            continue
        prims[tau] = build_primitive_over(f, omega, tau, r)
    horizontal: list[HorizontalReport] = []
    if check_horizontal_faces:
        for tau, prim in prims.items():
            for tau_face in sorted(f.target.cells):
                if tau_face.vset < tau.vset and tau_face in prims:
                    horizontal.append(
                        check_horizontal(f, omega, prim, tau_face, r))
    return PrimitiveResult(prims, horizontal)


# ---------------------------------------------------------------------------
# Floating-point oracle for the extracted coefficients
# ---------------------------------------------------------------------------

def _gauss_legendre_01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def simplex_quadrature(dim: int, order: int = 8):
    """Product Gauss rule mapped to the unit simplex by stick-breaking."""
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    x1, w1 = _gauss_legendre_01(order)
    nodes = []
    weights = []
    for combo in itertools.product(range(order), repeat=dim):
        pt = np.empty(dim)
        wt = 1.0
        remaining = 1.0
        for k, idx in enumerate(combo):
            u = x1[idx]
            pt[k] = u * remaining
            wt *= w1[idx] * remaining
            remaining -= pt[k]
        nodes.append(pt)
        weights.append(wt)
    return np.asarray(nodes), np.asarray(weights)


def oracle_A(eta: Form, f: SimplicialMorphism, sigma: Simplex, phi: RelFace,
             eps: float = 1e-4, order: int = 8) -> tuple[float, float]:
    """Shrinking-average estimate of the working coefficient of phi.

    Averages the contraction of eta with phi's fiber frame over the
    eps-homothety of phi's fiber slice, centered at the slice centroid over
    the base barycenter.  Returns (estimate, exact value at the center).
    """
    sctx = simplex_context(sigma)
    tau = f.image(sigma)
    s = tau.dim
    g = pair_with_face(eta, phi)
    fact = 1.0
    for dd in phi.block_dims():
        fact *= _factorial(dd)
    # center: base barycenter, block centroids
    tbar = Q(1, s + 1)
    center = [Q(0)] * sctx.nvars
    for block in phi.blocks:
        for v in block:
            center[sctx.var("l", v)] = tbar * Q(1, len(block))
    exact = float(g.evaluate(center)) / fact

    # quadrature over the product of block simplices, scaled by eps around x
    blocks = [b for b in phi.blocks]
    rules = [simplex_quadrature(len(b) - 1, order) for b in blocks]
    total = 0.0
    wsum = 0.0
    for combo in itertools.product(*(range(len(r[1])) for r in rules)):
        pt = [float(c) for c in center]
        wt = 1.0
        for (nodes, weights), b, idx in zip(rules, blocks, combo):
            wt *= weights[idx]
            coords = nodes[idx]
            tail = 1.0 - float(np.sum(coords))
            full = [tail] + list(coords)
            for v, cv in zip(b, full):
                i = sctx.var("l", v)
                slice_pt = float(tbar) * cv
                pt[i] = float(center[i]) + eps * (slice_pt - float(center[i]))
        total += wt * g.evaluate_float(pt)
        wsum += wt
    return (total / wsum) / fact, exact
