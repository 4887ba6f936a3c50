"""File formats: complexes, morphisms and forms as JSON with exact rationals.

Rationals are serialized as "num/den" strings (or "num" when integral).
Validation errors carry the offending cell so the CLI can report the first
violated invariant.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .mesh import Simplex, SimplicialComplex, SimplicialMorphism, StructureError
from .forms import CoordSystem, Form, Poly

Q = Fraction


class ValidationError(ValueError):
    pass


def rational_to_str(q: Fraction) -> str:
    q = Q(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def rational_from_str(s) -> Fraction:
    if isinstance(s, int):
        return Q(s)
    if isinstance(s, str):
        if "/" in s:
            num, den = s.split("/")
            return Q(int(num), int(den))
        return Q(int(s))
    raise ValidationError(f"expected an exact rational, got {s!r}")


# ---------------------------------------------------------------------------
# Complexes and morphisms
# ---------------------------------------------------------------------------

def complex_to_dict(cx: SimplicialComplex) -> dict:
    return {"vertices": list(cx.vertices),
            "maximal_simplices": [list(m.vertices) for m in cx.maximal]}


def complex_from_dict(dd: dict) -> SimplicialComplex:
    if "maximal_simplices" not in dd:
        raise ValidationError("complex file needs 'maximal_simplices'")
    cells = []
    for raw in dd["maximal_simplices"]:
        if len(set(raw)) != len(raw):
            raise ValidationError(f"repeated vertex in simplex {raw}")
        cells.append(Simplex(tuple(int(v) for v in raw)))
    cx = SimplicialComplex(cells)
    declared = dd.get("vertices")
    if declared is not None and set(map(int, declared)) != set(cx.vertices):
        missing = set(map(int, declared)) ^ set(cx.vertices)
        raise ValidationError(f"vertex list disagrees with simplices at {sorted(missing)}")
    return cx


def morphism_from_dict(dd: dict, source: SimplicialComplex,
                       target: SimplicialComplex) -> SimplicialMorphism:
    if "vertex_map" not in dd:
        raise ValidationError("morphism file needs 'vertex_map'")
    vmap = {int(k): int(v) for k, v in dd["vertex_map"].items()}
    try:
        return SimplicialMorphism(source, target, vmap)
    except StructureError as exc:
        raise ValidationError(str(exc)) from exc


def morphism_to_dict(f: SimplicialMorphism) -> dict:
    return {"vertex_map": {str(k): str(v) for k, v in sorted(f.vertex_map.items())}}


# ---------------------------------------------------------------------------
# Coordinate systems and forms
# ---------------------------------------------------------------------------

def context_to_dict(ctx: CoordSystem) -> dict:
    return {"groups": [{"tag": tag, "vertices": list(verts)}
                       for tag, verts in ctx.groups]}


def context_from_dict(dd: dict) -> CoordSystem:
    try:
        groups = tuple((g["tag"], tuple(int(v) for v in g["vertices"]))
                       for g in dd["groups"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed context: {exc}") from exc
    return CoordSystem(groups)


def poly_to_list(p: Poly) -> list:
    out = []
    names = p.ctx.names
    for e, c in sorted(p.terms.items()):
        exp = {names[i]: n for i, n in enumerate(e) if n}
        out.append({"c": rational_to_str(c), "exp": exp})
    return out


def poly_from_list(ctx: CoordSystem, items: list) -> Poly:
    terms = {}
    for item in items:
        e = [0] * ctx.nvars
        for name, n in item.get("exp", {}).items():
            if name not in ctx.index:
                raise ValidationError(f"unknown variable {name!r} in polynomial")
            e[ctx.index[name]] = int(n)
        terms[tuple(e)] = terms.get(tuple(e), Q(0)) + rational_from_str(item["c"])
    return Poly(ctx, terms)


def form_to_dict(form: Form) -> dict:
    names = form.ctx.names
    terms = []
    for dv, p in sorted(form.terms.items(), key=lambda kv: (len(kv[0]), kv[0])):
        terms.append({"dvars": [names[i] for i in dv], "poly": poly_to_list(p)})
    return {"context": context_to_dict(form.ctx), "terms": terms}


def form_from_dict(dd: dict) -> Form:
    ctx = context_from_dict(dd["context"])
    out = Form.zero(ctx)
    for item in dd.get("terms", []):
        dv = []
        for name in item["dvars"]:
            if name not in ctx.index:
                raise ValidationError(f"unknown differential {name!r}")
            dv.append(ctx.index[name])
        if sorted(set(dv)) != dv:
            raise ValidationError(f"dvars must be strictly increasing: {item['dvars']}")
        # entries with a repeated wedge part accumulate
        out = out + Form(ctx, {tuple(dv): poly_from_list(ctx, item["poly"])})
    return out


def forms_file_to_inputs(dd: dict, cx: SimplicialComplex) -> dict[Simplex, Form]:
    """Per-cell input forms: {"forms": [{"cell": [...], "terms": [...]}]}.

    Each entry's context is the simplex context of its cell; an explicit
    "context" is honored but must match.
    """
    entries = dd["forms"] if isinstance(dd, dict) and "forms" in dd else [dd]
    out: dict[Simplex, Form] = {}
    for entry in entries:
        if "cell" not in entry:
            raise ValidationError("form entry needs a 'cell'")
        cell = Simplex(tuple(int(v) for v in entry["cell"]))
        if cell not in cx:
            raise ValidationError(f"form cell {list(cell.vertices)} is not in the complex")
        ctx = CoordSystem((("l", cell.vertices),))
        if "context" in entry:
            declared = context_from_dict(entry["context"])
            if declared != ctx:
                raise ValidationError(
                    f"context of {list(cell.vertices)} must be its simplex context")
        out[cell] = form_from_dict({"context": context_to_dict(ctx),
                                    "terms": entry.get("terms", [])})
    return out


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def dump_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
