"""Executable identity checks over generated small universes.

Every check canonicalizes a difference of forms and reports the residual;
a pass means the residual is literally zero in exact arithmetic.  Case
generation is exhaustive within the stated bounds; the one randomized
family (polynomial multipliers) uses a seeded generator so reports are
reproducible.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .mesh import (Prism, Simplex, SimplicialComplex, SimplicialMorphism,
                   incidence_number, prism_incidence)
from .forms import (CoordSystem, Form, Poly, canonicalize, d, de_form,
                    group_whitney, group_whitney_extended, integrate_fiber,
                    pi_context, prism_context, pullback, restrict_to_face,
                    simplex_context, wedge, wedge_all, whitney,
                    whitney_antiboundary, whitney_extended, whitney_prism,
                    whitney_relative, whitney_relative_extended)
from .sheaf import psi_coordinate_map
from . import fixtures as fixture_mod

Q = Fraction


@dataclass
class IdentityReport:
    """Outcome of one identity check on one generated case."""

    identity: str
    case: str
    passed: bool
    residual: str | None = None

    def as_dict(self):
        out = {"identity": self.identity, "case": self.case,
               "status": "pass" if self.passed else "fail"}
        if self.residual is not None:
            out["residual"] = self.residual
        return out


def _report(identity: str, case: str, delta: Form) -> IdentityReport:
    zero = delta.is_zero
    return IdentityReport(identity, case, zero, None if zero else repr(delta))


def _canonical_simplex(p: int) -> Simplex:
    return Simplex(tuple(range(p + 1)))


def _canonical_prism(dims: tuple[int, ...]) -> Prism:
    factors, v = [], 0
    for dd in dims:
        factors.append(Simplex(tuple(range(v, v + dd + 1))))
        v += dd + 1
    return Prism(tuple(factors))


def simplex_universe(max_dim: int = 4):
    return [_canonical_simplex(p) for p in range(1, max_dim + 1)]


def prism_universe(max_factor_dim: int = 2, max_factors: int = 3):
    out = []
    for k in range(1, max_factors + 1):
        for dims in itertools.product(range(1, max_factor_dim + 1), repeat=k):
            out.append(_canonical_prism(dims))
    return out


# ---------------------------------------------------------------------------
# Extension differentials
# ---------------------------------------------------------------------------

def verify_lemcod_simplex(s: Simplex, face: Simplex) -> IdentityReport:
    """d of the extended facet form equals the incidence-signed cell form."""
    delta = canonicalize(d(whitney_extended(face, s))
                         - whitney(s) * Q(incidence_number(s, face)))
    return _report("lemcod.a", f"{s} face {face}", delta)


def prism_whitney_extended(p: Prism, q: Prism) -> Form:
    ctx = prism_context(p)
    return wedge_all(group_whitney_extended(ctx, j, q.factors[j].vertices)
                     for j in range(len(p.factors)))


def verify_lemcod_prism(p: Prism, q: Prism) -> IdentityReport:
    delta = canonicalize(d(prism_whitney_extended(p, q))
                         - whitney_prism(p) * Q(prism_incidence(p, q)))
    return _report("lemcod.b", f"{p} face {q}", delta)


def _affine_coeff_forms(ctx: CoordSystem, degree: int):
    """Basis of forms of the given degree with affine coefficients, in the
    canonical chart (last variable of each group eliminated)."""
    reduced = [i for gvars in ctx.group_vars for i in gvars[:-1]]
    basis = []
    for dv in itertools.combinations(reduced, degree):
        for coeff_var in [None] + reduced:
            p = (Poly.const(ctx, 1) if coeff_var is None
                 else Poly.variable(ctx, coeff_var))
            basis.append(Form(ctx, {tuple(dv): p}))
    return basis


def _form_vector(form: Form, ctx: CoordSystem, slots: dict) -> list[Fraction]:
    vec = [Q(0)] * len(slots)
    for dv, p in form.terms.items():
        for e, c in p.terms.items():
            key = (dv, e)
            if key not in slots:
                slots[key] = len(slots)
                vec.append(Q(0))
            vec[slots[key]] = c
    return vec


def _rank(rows: list[list[Fraction]]) -> int:
    if not rows:
        return 0
    width = max(len(r) for r in rows)
    m = [r + [Q(0)] * (width - len(r)) for r in rows]
    rank = 0
    col = 0
    nrows = len(m)
    while col < width and rank < nrows:
        piv = next((r for r in range(rank, nrows) if m[r][col]), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = Q(1) / m[rank][col]
        m[rank] = [x * inv for x in m[rank]]
        for r in range(nrows):
            if r != rank and m[r][col]:
                fac = m[r][col]
                m[r] = [a - fac * b for a, b in zip(m[r], m[rank])]
        rank += 1
        col += 1
    return rank


def codim1_prism_faces(p: Prism) -> list[Prism]:
    out = []
    for j, fj in enumerate(p.factors):
        if fj.dim >= 1:
            for i in range(len(fj.vertices)):
                out.append(Prism(p.factors[:j] + (fj.facet_omitting(i),)
                                 + p.factors[j + 1:]))
    return out


def verify_lemcod_basis(p: Prism) -> IdentityReport:
    """The extended codim-1 forms are a basis of the space of forms one
    degree below the top whose coefficients are affine and whose facet
    restrictions are multiples of the facet volume forms."""
    ctx = prism_context(p)
    fcs = codim1_prism_faces(p)
    slots: dict = {}
    rows = [_form_vector(canonicalize(prism_whitney_extended(p, q)), ctx, slots)
            for q in fcs]
    rank = _rank(rows)
    if rank != len(fcs):
        return IdentityReport("lemcod.c", f"{p} independence", False,
                              f"rank {rank} != {len(fcs)}")
    # dimension of the constrained space: solve the linear system
    basis = _affine_coeff_forms(ctx, p.dim - 1)
    conditions: list[list[Fraction]] = []
    ncoef = len(basis) + len(fcs)
    cond_slots_per_face = []
    for fi, q in enumerate(fcs):
        qctx = prism_context(q)
        slots_q: dict = {}
        restricted = [canonicalize(restrict_to_face(b, qctx)) for b in basis]
        wq = canonicalize(whitney_prism(q))
        vecs = [_form_vector(rf, qctx, slots_q) for rf in restricted]
        wvec = _form_vector(wq, qctx, slots_q)
        width = len(slots_q)
        for slot in range(width):
            row = [Q(0)] * ncoef
            for bi, v in enumerate(vecs):
                row[bi] = v[slot] if slot < len(v) else Q(0)
            row[len(basis) + fi] = -(wvec[slot] if slot < len(wvec) else Q(0))
            conditions.append(row)
    total_rank = _rank(conditions)
    sol_dim = ncoef - total_rank
    # forms with zero coefficients force zero multipliers, so the solution
    # space projects injectively onto the form part
    if sol_dim != len(fcs):
        return IdentityReport("lemcod.c", f"{p} span", False,
                              f"solution dim {sol_dim} != {len(fcs)}")
    return IdentityReport("lemcod.c", f"{p}", True)


def basis_universe(max_dim: int = 4, max_factor_dim: int = 2,
                   max_factors: int = 3):
    """Cells for the basis check: simplices as one-factor prisms, plus the
    multi-factor prism universe."""
    cells = [Prism((s,)) for s in simplex_universe(max_dim)]
    cells += [p for p in prism_universe(max_factor_dim, max_factors)
              if len(p.factors) > 1]
    return cells


def verify_lemcod(max_dim: int = 4, max_factor_dim: int = 2,
                  max_factors: int = 3, with_basis: bool = True):
    reports = []
    for s in simplex_universe(max_dim):
        for i in range(len(s.vertices)):
            reports.append(verify_lemcod_simplex(s, s.facet_omitting(i)))
    for p in prism_universe(max_factor_dim, max_factors):
        for q in codim1_prism_faces(p):
            reports.append(verify_lemcod_prism(p, q))
    if with_basis:
        for p in basis_universe(max_dim, max_factor_dim, max_factors):
            if p.dim >= 1:
                reports.append(verify_lemcod_basis(p))
    return reports


# ---------------------------------------------------------------------------
# Boundary antiderivative
# ---------------------------------------------------------------------------

def verify_bord(s: Simplex) -> IdentityReport:
    delta = canonicalize(d(whitney_antiboundary(s)) - whitney(s))
    return _report("bord", f"{s}", delta)


def verify_bord_suite(max_dim: int = 4):
    return [verify_bord(s) for s in simplex_universe(max_dim)]


# ---------------------------------------------------------------------------
# Star sums and multiplier differentials
# ---------------------------------------------------------------------------

def verify_satrap(p: int, ell: int) -> IdentityReport:
    """Sum of one-vertex extensions of a face collapses to a constant
    multiple of the face's coordinate wedge."""
    s = _canonical_simplex(p)
    ctx = simplex_context(s)
    total = Form.zero(ctx)
    for h in range(ell + 1, p + 1):
        total = total + group_whitney_extended(ctx, 0, tuple(range(ell + 1)) + (h,))
    fact = 1
    for k in range(1, ell + 2):
        fact *= k
    rhs = Form(ctx, {tuple(range(ell + 1)): Poly.const(ctx, Q((-1) ** (ell + 1) * fact))})
    return _report("satrap", f"p={p} l={ell}",
                   canonicalize(total - rhs))


def _satrapaz_rhs(ctx: CoordSystem, p: int, ell: int, E: Poly) -> Form:
    rhs = Form.zero(ctx)
    for h in range(ell + 1, p + 1):
        # substitute the h-th coordinate by 1 - sum(others)
        one_minus = Poly.const(ctx, 1)
        for i in range(p + 1):
            if i != h:
                one_minus = one_minus - Poly.variable(ctx, i)
        images = {i: (one_minus if i == h else Poly.variable(ctx, i))
                  for i in range(p + 1)}
        Eh = E.substitute(images, ctx)
        coeff = Eh
        for i in range(p + 1):
            if i != h:
                coeff = coeff + Poly.variable(ctx, i) * Eh.diff(i) * Q(1, ell + 1)
        w = group_whitney_extended(ctx, 0, tuple(range(ell + 1)) + (h,))
        rhs = rhs + w * (coeff * Q((-1) ** (ell + 1)))
    return rhs


def verify_satrapaz(p: int, ell: int, E: Poly) -> IdentityReport:
    """Distribution-style differential of a multiplied extension form."""
    s = _canonical_simplex(p)
    ctx = simplex_context(s)
    assert E.ctx == ctx
    lhs = d(wedge(Form.from_poly(E),
                  group_whitney_extended(ctx, 0, tuple(range(ell + 1)))))
    rhs = _satrapaz_rhs(ctx, p, ell, E)
    return _report("satrapaz", f"p={p} l={ell} E={E}", canonicalize(lhs - rhs))


def random_poly(ctx: CoordSystem, rng: random.Random, max_degree: int = 3) -> Poly:
    terms = {}
    nv = ctx.nvars
    for _ in range(rng.randint(1, 4)):
        e = [0] * nv
        for _ in range(rng.randint(0, max_degree)):
            e[rng.randrange(nv)] += 1
        terms[tuple(e)] = Q(rng.randint(-6, 6), rng.randint(1, 4))
    return Poly(ctx, terms)


def verify_satrap_suite(max_p: int = 4, max_ell: int = 2, seed: int = 0,
                        n_random: int = 20):
    reports = []
    for p in range(1, max_p + 1):
        for ell in range(0, min(max_ell, p - 1) + 1):
            reports.append(verify_satrap(p, ell))
    return reports


def verify_satrapaz_suite(max_p: int = 4, max_ell: int = 2, seed: int = 0,
                          n_random: int = 20):
    reports = []
    cases = [(p, ell) for p in range(1, max_p + 1)
             for ell in range(0, min(max_ell, p - 1) + 1)]
    for p, ell in cases:
        ctx = simplex_context(_canonical_simplex(p))
        reports.append(verify_satrapaz(p, ell, Poly.const(ctx, 1)))
        reports.append(verify_satrapaz(p, ell, Poly.variable(ctx, 0)))
    rng = random.Random(seed)
    for k in range(n_random):
        p, ell = cases[rng.randrange(len(cases))]
        ctx = simplex_context(_canonical_simplex(p))
        reports.append(verify_satrapaz(p, ell, random_poly(ctx, rng)))
    return reports


# ---------------------------------------------------------------------------
# Pullback of the volume form through the blow-down chart
# ---------------------------------------------------------------------------

def verify_iminve(f: SimplicialMorphism, sigma: Simplex) -> IdentityReport:
    """psi-pullback of the cell volume form against the weighted product
    volume form, with the permutation sign from the stored orders."""
    tau = f.image(sigma)
    fibers = f.fibers(sigma)
    psi = psi_coordinate_map(f, sigma)
    pctx = psi.source
    p, s = sigma.dim, tau.dim
    lhs = pullback(psi, whitney(sigma))
    dims = [fib.dim for fib in fibers]
    alpha = sum((s - j) * dims[j] for j in range(s)) + (
        0 if f.grouping_sign(sigma) == 1 else 1)
    num = 1
    for k in range(1, p + 1):
        num *= k
    den = 1
    for k in range(1, s + 1):
        den *= k
    for dd in dims:
        for k in range(1, dd + 1):
            den *= k
    coeff = Q((-1) ** alpha * num, den)
    t_mon = Poly.const(pctx, 1)
    for y, dd in zip(tau.vertices, dims):
        t_mon = t_mon * Poly.variable(pctx, pctx.var("t", y)) ** dd
    rhs = wedge_all([group_whitney(pctx, g) for g in range(len(pctx.groups))])
    rhs = rhs * (t_mon * coeff)
    return _report("iminve", f"{sigma}->{tau} dims={tuple(dims)}",
                   canonicalize(lhs - rhs))


def verify_iminve_suite(max_p: int = 4, max_s: int = 2):
    reports = []
    for p in range(1, max_p + 1):
        for s in range(0, min(max_s, p) + 1):
            for assignment in itertools.product(range(s + 1), repeat=p + 1):
                if set(assignment) != set(range(s + 1)):
                    continue
                delta = SimplicialComplex([_canonical_simplex(p)])
                base = SimplicialComplex([Simplex(tuple(range(100, 101 + s)))])
                vmap = {v: 100 + assignment[v] for v in range(p + 1)}
                f = SimplicialMorphism(delta, base, vmap)
                reports.append(verify_iminve(f, _canonical_simplex(p)))
    return reports


# ---------------------------------------------------------------------------
# Opposite-face factorizations
# ---------------------------------------------------------------------------

def verify_faceface(p: int, q: int) -> IdentityReport:
    """Volume form as the product of two opposite face forms and a signed
    logarithmic segment form, after clearing the denominator."""
    s = _canonical_simplex(p)
    ctx = simplex_context(s)
    face1 = tuple(range(q + 1))
    face2 = tuple(range(q + 1, p + 1))
    u = Poly.zero(ctx)
    for i in face1:
        u = u + Poly.variable(ctx, i)
    du = Form.zero(ctx)
    for i in face1:
        du = du + Form.d_var(ctx, i)
    # (-1)^(p+q) p! / (q! (p-q-1)!): sign and magnitude pinned by the
    # exact-multiple fit over all (p, q) up to 5 with subsequence orientations
    coeff = Q(1)
    for k in range(1, p + 1):
        coeff *= k
    for k in range(1, q + 1):
        coeff /= k
    for k in range(1, p - q):
        coeff /= k
    coeff *= Q((-1) ** (p + q))
    rhs = wedge(wedge(group_whitney_extended(ctx, 0, face1),
                      group_whitney_extended(ctx, 0, face2)), du) * coeff
    lhs = whitney(s) * (u * (Poly.const(ctx, 1) - u))
    return _report("faceface", f"p={p} q={q}", canonicalize(lhs - rhs))


def verify_facepri(p: int) -> IdentityReport:
    """Codimension-1 version: w(cell) * (1 - last coord) against the
    extended facet form wedged with the last differential."""
    s = _canonical_simplex(p)
    ctx = simplex_context(s)
    face = tuple(range(p))
    lhs = whitney(s) * (Poly.const(ctx, 1) - Poly.variable(ctx, p))
    rhs = wedge(group_whitney_extended(ctx, 0, face), Form.d_var(ctx, p)) * Q(p)
    return _report("facepri", f"p={p}", canonicalize(lhs - rhs))


def verify_facepro(dims: tuple[int, ...]) -> IdentityReport:
    """Prism version assembled factor-wise, with facet/point opposite pairs
    in every factor; denominators cleared so both sides are polynomial."""
    p = _canonical_prism(dims)
    ctx = prism_context(p)
    lhs = whitney_prism(p)
    rhs = Form.const(ctx, 1)
    for j, fj in enumerate(p.factors):
        pj = fj.dim
        face1 = fj.vertices[:pj]
        last = fj.vertices[pj]
        block = wedge(group_whitney_extended(ctx, j, face1),
                      Form.d_var(ctx, ctx.var(f"m:{j}", last))) * Q(pj)
        rhs = wedge(rhs, block)
        lhs = lhs * (Poly.const(ctx, 1) - Poly.variable(ctx, ctx.var(f"m:{j}", last)))
    return _report("facepro", f"dims={dims}", canonicalize(lhs - rhs))


def verify_faceface_suite(max_p: int = 4, max_q: int = 2,
                          prism_dims=((1, 1), (1, 2), (2, 1), (2, 2))):
    reports = []
    for p in range(2, max_p + 1):
        for q in range(0, min(max_q, p - 1) + 1):
            if p - q - 1 < 0:
                continue
            reports.append(verify_faceface(p, q))
    for p in range(1, max_p + 1):
        reports.append(verify_facepri(p))
    for dims in prism_dims:
        reports.append(verify_facepro(dims))
    return reports


# ---------------------------------------------------------------------------
# Relative form identities on the trivialized sheaves
# ---------------------------------------------------------------------------

def _fixture_morphisms():
    return [fixture_mod.triangle_fan(), fixture_mod.square_over_edge(),
            fixture_mod.five_over_two(), fixture_mod.tetra_pair_over_triangle()]


def verify_relative_suite(fixture_names=None):
    reports = []
    morphisms = _fixture_morphisms() if fixture_names is None else [
        fixture_mod.FIXTURES[n]() for n in fixture_names]
    for f in morphisms:
        name = ",".join(str(m) for m in f.source.maximal[:2])
        for tau in sorted(f.target.cells):
            tops = [s for s in f.preimage_cells(tau) if f.image(s) == tau]
            for sigma in tops:
                ctx = pi_context(tau, f.fibers(sigma))
                wrel = whitney_relative(ctx)
                # fiber integral is identically one
                integral = integrate_fiber(wrel)
                delta = canonicalize(Form.from_poly(integral) - Form.const(ctx, 1))
                reports.append(_report("relative.integral",
                                       f"{sigma} over {tau}", delta))
                # weighted relative volume form specializes coherently
                for tau_f in sorted(f.target.cells):
                    if not tau_f.vset < tau.vset:
                        continue
                    reports.append(_opicsh_case(f, sigma, tau, tau_f))
                # the relative differential of the extended forms: one-step
                # fiber facets give incidence-signed volume forms
                reports.extend(_lemrol_cases(f, sigma, tau))
                # the fiberwise-vanishing criterion: base multiples die,
                # the relative volume form survives
                reports.append(_lecare_case(f, sigma, tau))
    return reports


def _lecare_case(f, sigma, tau) -> IdentityReport:
    from .forms import is_fiberwise_zero
    ctx = pi_context(tau, f.fibers(sigma))
    wrel = whitney_relative(ctx)
    ok = True
    if tau.dim >= 1:
        # multiples of the base volume form restrict to zero on fibers
        ok = is_fiberwise_zero(wedge(de_form(ctx), wrel))
    d_rel = sum(fib.dim for fib in f.fibers(sigma))
    if d_rel >= 1:
        ok = ok and not is_fiberwise_zero(wrel)
    return IdentityReport("relative.fiberwise_zero", f"{sigma} over {tau}", ok,
                          None if ok else "criterion misclassified a form")


def _opicsh_case(f, sigma, tau, tau_f) -> IdentityReport:
    from .primitive import specialization_chart, t_monomial
    ctx = pi_context(tau, f.fibers(sigma))
    dims = [fib.dim for fib in f.fibers(sigma)]
    weighted = whitney_relative(ctx) * t_monomial(ctx, tau, dims)
    chart = specialization_chart(f, sigma, tau_f)
    specialized = pullback(chart, weighted)
    lost = [dims[j] for j, y in enumerate(tau.vertices) if y not in tau_f.vset]
    sigma_f = f.restriction_to(sigma, tau_f)
    if any(dd > 0 for dd in lost):
        delta = canonicalize(specialized)
        return _report("relative.weights",
                       f"{sigma} over {tau} -> {tau_f} (drops)", delta)
    sub = pi_context(tau_f, f.fibers(sigma_f))
    dims_f = [fib.dim for fib in f.fibers(sigma_f)]
    direct = whitney_relative(sub) * t_monomial(sub, tau_f, dims_f)
    delta = canonicalize(specialized - direct)
    return _report("relative.weights",
                   f"{sigma} over {tau} -> {tau_f} (equidim)", delta)


def _lemrol_cases(f, sigma, tau):
    from .forms import relative_d
    reports = []
    ctx = pi_context(tau, f.fibers(sigma))
    fibers = f.fibers(sigma)
    fiber_prism = Prism(fibers) if all(not fib.is_empty for fib in fibers) else None
    for j, fib in enumerate(fibers):
        if fib.dim < 1:
            continue
        for i in range(len(fib.vertices)):
            sub = list(fibers)
            sub[j] = fib.facet_omitting(i)
            ext = whitney_relative_extended(ctx, [b.vertices for b in sub])
            lhs = relative_d(ext)
            sign = prism_incidence(fiber_prism, Prism(tuple(sub)))
            rhs = whitney_relative(ctx) * Q(sign)
            delta = canonicalize(lhs - rhs)
            reports.append(_report(
                "relative.facet_differential",
                f"{sigma} over {tau}, block {j} facet {i}", delta))
    # second case: same fibers over a base facet extend with zero d_e
    lhs2 = relative_d(whitney_relative(ctx))
    reports.append(_report("relative.flat_extension",
                           f"{sigma} over {tau}", canonicalize(lhs2)))
    return reports


# ---------------------------------------------------------------------------
# Suite registry
# ---------------------------------------------------------------------------

def run_suite(name: str, max_dim: int = 4, seed: int = 0):
    if name == "lemcod":
        return verify_lemcod(max_dim=max_dim)
    if name == "bord":
        return verify_bord_suite(max_dim=max_dim)
    if name == "satrap":
        return verify_satrap_suite(max_p=max_dim)
    if name == "satrapaz":
        return verify_satrapaz_suite(max_p=max_dim, seed=seed)
    if name == "iminve":
        return verify_iminve_suite(max_p=max_dim)
    if name == "faceface":
        return verify_faceface_suite(max_p=max_dim)
    if name == "relative":
        return verify_relative_suite()
    raise ValueError(f"unknown suite {name!r}")


SUITES = ("lemcod", "bord", "satrap", "satrapaz", "iminve", "faceface",
          "relative")


def run_all(max_dim: int = 4, seed: int = 0):
    reports = []
    for name in SUITES:
        reports.extend(run_suite(name, max_dim=max_dim, seed=seed))
    return reports
