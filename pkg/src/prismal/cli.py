"""Command line front end: identity suites, sheaf dumps, primitives.

Exit codes: 0 success, 1 identity/residual failure, 2 input validation
failure.  All outputs are JSON and deterministic given inputs and seed.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .io import (ValidationError, complex_from_dict, dump_json, form_to_dict,
                 forms_file_to_inputs, load_json, morphism_from_dict)
from .mesh import MeshError
from .sheaf import (build_Pf, build_Sf, check_Pf_characterization,
                    check_Sf_characterization, sheaf_to_dict)
from .verify import SUITES, run_all, run_suite

OPERATION_MAP_VERSION = "identity-map v1: lemcod, bord, satrap, satrapaz, iminve, faceface, relative"


def cmd_check(args) -> int:
    try:
        if args.suite == "all":
            reports = run_all(max_dim=args.max_dim, seed=args.seed)
        else:
            reports = run_suite(args.suite, max_dim=args.max_dim, seed=args.seed)
    except (ValidationError, MeshError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"FAIL {r.identity} [{r.case}] residual={r.residual}")
    print(f"{len(reports) - len(failed)}/{len(reports)} identity cases passed")
    if args.json:
        dump_json(args.json, {"suite": args.suite, "max_dim": args.max_dim,
                              "seed": args.seed,
                              "reports": [r.as_dict() for r in reports]})
    return 1 if failed else 0


def _load_morphism(args):
    cx = complex_from_dict(load_json(args.complex))
    morph_data = load_json(args.morphism)
    if "target" in morph_data:
        target = complex_from_dict(morph_data["target"])
    elif args.target:
        target = complex_from_dict(load_json(args.target))
    else:
        raise ValidationError(
            "morphism file needs a 'target' complex (or pass --target)")
    return morphism_from_dict(morph_data, cx, target)


def cmd_sheaf(args) -> int:
    try:
        f = _load_morphism(args)
        sf, pf = build_Sf(f), build_Pf(f)
    except (ValidationError, MeshError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    ok_s, wit_s = check_Sf_characterization(sf)
    res_p = check_Pf_characterization(pf)
    ok_p, wit_p = res_p[0], res_p[1]
    print(f"raw-preimage sheaf characterization: {'pass' if ok_s else 'FAIL: ' + str(wit_s)}")
    print(f"trivialized sheaf characterization: {'pass' if ok_p else 'FAIL: ' + str(wit_p)}")
    if args.dump_sheaf:
        dump_json(args.dump_sheaf, {"S": sheaf_to_dict(sf), "P": sheaf_to_dict(pf)})
        print(f"sheaf dump written to {args.dump_sheaf}")
    return 0 if (ok_s and ok_p) else 1


def cmd_primitive(args) -> int:
    from .forms import Form
    from .primitive import (ExactnessError, PrimitiveError, build_relative_primitive,
                            check_descent, oracle_A, verify_theodg)
    try:
        f = _load_morphism(args)
        omega = forms_file_to_inputs(load_json(args.form), f.source)
        degrees = {deg for form in omega.values() for deg in form.degrees()}
        r = args.degree if args.degree else (degrees.pop() if len(degrees) == 1 else 1)
    except (ValidationError, MeshError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    try:
        result = build_relative_primitive(f, omega, r=r,
                                          check_horizontal_faces=args.check_horizontal)
    except ExactnessError as exc:
        print(f"exactness error: {exc}", file=sys.stderr)
        return 1
    except (PrimitiveError, MeshError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2

    out = {"degree": r, "base_cells": {}, "horizontal": [], "oracle": []}
    residual_failures = 0
    for tau, prim in result.primitives.items():
        cell_out = {"prisms": {}, "H_S": {}}
        residuals = verify_theodg(f, omega, prim)
        for sigma, pd in prim.prisms.items():
            key = ",".join(map(str, sigma.vertices))
            cdict = {}
            for drop, poly in pd.C.items():
                label = (f"phi={','.join(map(str, drop.phi.vertices))}"
                         f";gamma={','.join(map(str, drop.gamma_vertices()))}")
                cdict[label] = form_to_dict(Form.from_poly(poly))
            cell_out["prisms"][key] = {
                "C": cdict,
                "D": form_to_dict(pd.correction),
                "H": form_to_dict(pd.H),
                "residual_zero": sigma not in residuals,
            }
            if sigma in residuals:
                residual_failures += 1
            N, m = prim.H_S[sigma]
            cell_out["H_S"][key] = {"numerator": form_to_dict(N),
                                    "denominator_exponents": list(m),
                                    "descent_verified": check_descent(pd.H, pd.pctx, pd.psi, prim.H_S[sigma])}
        out["base_cells"][",".join(map(str, tau.vertices))] = cell_out
    horizontal_failures = 0
    for rep in result.horizontal:
        ok = rep.ok
        horizontal_failures += 0 if ok else 1
        out["horizontal"].append({
            "tau": list(rep.tau.vertices), "face": list(rep.tau_face.vertices),
            "vanished_terms": rep.vanished_terms,
            "surviving_terms": rep.surviving_terms, "ok": ok})

    if args.oracle_eps:
        worst = 0.0
        for tau, prim in result.primitives.items():
            for sigma, pd in prim.prisms.items():
                for phi in pd.decomposition.faces:
                    est, exact = oracle_A(pd.eta, f, sigma, phi, eps=args.oracle_eps)
                    err = abs(est - exact)
                    worst = max(worst, err)
                    out["oracle"].append({
                        "sigma": list(sigma.vertices),
                        "phi": list(phi.vertices),
                        "estimate": est, "exact": exact, "abs_error": err})
        print(f"oracle worst absolute error: {worst:.3e}")

    dump_json(args.out, out)
    ok = residual_failures == 0 and horizontal_failures == 0
    print(f"residual check: {len(out['base_cells'])} base cells, "
          f"{residual_failures} failures; horizontal: {horizontal_failures} failures")
    print(f"primitive written to {args.out}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="prismal",
        description="Exact barycentric exterior calculus and relative primitives")
    ap.add_argument("--version", action="version",
                    version=f"prismal {__version__} ({OPERATION_MAP_VERSION})")
    sub = ap.add_subparsers(dest="command", required=True)

    chk = sub.add_parser("check", help="run identity suites on built-in universes")
    chk.add_argument("--suite", default="all", choices=("all",) + SUITES)
    chk.add_argument("--max-dim", type=int, default=4)
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--json", default=None, help="write a JSON report")
    chk.set_defaults(fn=cmd_check)

    sh = sub.add_parser("sheaf", help="build both sheaves of a morphism")
    sh.add_argument("--complex", required=True)
    sh.add_argument("--morphism", required=True)
    sh.add_argument("--target", default=None)
    sh.add_argument("--dump-sheaf", default=None)
    sh.set_defaults(fn=cmd_sheaf)

    pr = sub.add_parser("primitive", help="build a relative primitive")
    pr.add_argument("--complex", required=True)
    pr.add_argument("--morphism", required=True)
    pr.add_argument("--target", default=None)
    pr.add_argument("--form", required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--degree", type=int, default=None)
    pr.add_argument("--check-horizontal", action="store_true")
    pr.add_argument("--oracle-eps", type=float, default=None)
    pr.set_defaults(fn=cmd_primitive)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
