import json
from fractions import Fraction as Q

import pytest

from prismal.cli import main
from prismal.fixtures import triangle_fan
from prismal.forms import Form, Poly, d, simplex_context
from prismal.io import (ValidationError, complex_from_dict, complex_to_dict,
                        form_from_dict, form_to_dict, forms_file_to_inputs,
                        morphism_from_dict, morphism_to_dict,
                        rational_from_str, rational_to_str)
from prismal.mesh import Simplex


def S(*vs):
    return Simplex(tuple(vs))


def test_rational_strings():
    assert rational_to_str(Q(3, 4)) == "3/4"
    assert rational_to_str(Q(5)) == "5"
    assert rational_from_str("3/4") == Q(3, 4)
    assert rational_from_str("-2") == Q(-2)
    assert rational_from_str(7) == Q(7)
    with pytest.raises(ValidationError):
        rational_from_str(1.5)


def test_complex_roundtrip_and_validation():
    f = triangle_fan()
    dd = complex_to_dict(f.source)
    assert complex_from_dict(dd).cells == f.source.cells
    with pytest.raises(ValidationError):
        complex_from_dict({"maximal_simplices": [[0, 0, 1]]})
    with pytest.raises(ValidationError):
        complex_from_dict({"vertices": [0, 1, 99], "maximal_simplices": [[0, 1]]})
    with pytest.raises(ValidationError):
        complex_from_dict({})


def test_morphism_roundtrip_and_validation():
    f = triangle_fan()
    dd = morphism_to_dict(f)
    back = morphism_from_dict(dd, f.source, f.target)
    assert back.vertex_map == f.vertex_map
    bad = {"vertex_map": {str(v): "100" for v in f.source.vertices}}
    bad["vertex_map"]["5"] = "102"
    # collapsing everything except 5 breaks the simplex-image invariant
    with pytest.raises(ValidationError):
        morphism_from_dict(bad, f.source, f.target)


def test_form_roundtrip():
    sc = simplex_context(S(0, 1, 2))
    form = d(Form.from_poly(Poly.variable(sc, 0) * Poly.variable(sc, 1) * Q(1, 3)))
    dd = form_to_dict(form)
    assert dd["context"] == {"groups": [{"tag": "l", "vertices": [0, 1, 2]}]}
    back = form_from_dict(json.loads(json.dumps(dd)))
    assert back == form


def test_form_validation_errors():
    base = {"context": {"groups": [{"tag": "l", "vertices": [0, 1]}]}}
    with pytest.raises(ValidationError):
        form_from_dict({**base, "terms": [{"dvars": ["l:9"], "poly": []}]})
    with pytest.raises(ValidationError):
        form_from_dict({**base, "terms": [
            {"dvars": ["l:1", "l:0"], "poly": [{"c": "1", "exp": {}}]}]})
    with pytest.raises(ValidationError):
        form_from_dict({**base, "terms": [
            {"dvars": ["l:0"], "poly": [{"c": "1", "exp": {"l:9": 1}}]}]})


def test_forms_file_referential_integrity():
    f = triangle_fan()
    good = {"forms": [{"cell": [0, 2, 3], "terms": []}]}
    out = forms_file_to_inputs(good, f.source)
    assert S(0, 2, 3) in out
    with pytest.raises(ValidationError):
        forms_file_to_inputs({"forms": [{"cell": [0, 5], "terms": []}]}, f.source)
    with pytest.raises(ValidationError):
        forms_file_to_inputs({"forms": [{"terms": []}]}, f.source)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _write_fixture_files(tmp_path, pairs=((2, 3), (3, 4), (0, 3), (3, 5))):
    f = triangle_fan()
    cpath = tmp_path / "c.json"
    mpath = tmp_path / "f.json"
    wpath = tmp_path / "w.json"
    cpath.write_text(json.dumps(complex_to_dict(f.source)))
    mdict = morphism_to_dict(f)
    mdict["target"] = complex_to_dict(f.target)
    mpath.write_text(json.dumps(mdict))
    forms = []
    for s in f.source.maximal:
        sc = simplex_context(s)
        poly = Poly.zero(sc)
        for vs in pairs:
            if all(v in s.vertices for v in vs):
                term = Poly.const(sc, 1)
                for v in vs:
                    term = term * Poly.variable(sc, sc.var("l", v))
                poly = poly + term
        fd = form_to_dict(d(Form.from_poly(poly)))
        fd["cell"] = list(s.vertices)
        forms.append(fd)
    wpath.write_text(json.dumps({"forms": forms}))
    return cpath, mpath, wpath


def test_cmd_check_pass(capsys):
    assert main(["check", "--suite", "bord"]) == 0
    out = capsys.readouterr().out
    assert "4/4" in out


def test_cmd_check_json_report(tmp_path):
    report = tmp_path / "report.json"
    assert main(["check", "--suite", "satrap", "--json", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["suite"] == "satrap"
    assert all(r["status"] == "pass" for r in data["reports"])


def test_cmd_sheaf(tmp_path, capsys):
    cpath, mpath, _ = _write_fixture_files(tmp_path)
    dump = tmp_path / "sheaf.json"
    assert main(["sheaf", "--complex", str(cpath), "--morphism", str(mpath),
                 "--dump-sheaf", str(dump)]) == 0
    data = json.loads(dump.read_text())
    assert "S" in data and "P" in data
    assert "100,101" in data["P"]["stalks"]
    out = capsys.readouterr().out
    assert "pass" in out


def test_cmd_sheaf_golden_stable(tmp_path):
    cpath, mpath, _ = _write_fixture_files(tmp_path)
    d1, d2 = tmp_path / "a.json", tmp_path / "b.json"
    main(["sheaf", "--complex", str(cpath), "--morphism", str(mpath),
          "--dump-sheaf", str(d1)])
    main(["sheaf", "--complex", str(cpath), "--morphism", str(mpath),
          "--dump-sheaf", str(d2)])
    assert d1.read_text() == d2.read_text()


def test_cmd_primitive_success(tmp_path, capsys):
    cpath, mpath, wpath = _write_fixture_files(tmp_path)
    out = tmp_path / "h.json"
    code = main(["primitive", "--complex", str(cpath), "--morphism", str(mpath),
                 "--form", str(wpath), "--out", str(out), "--check-horizontal"])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["degree"] == 1
    assert data["horizontal"] and all(h["ok"] for h in data["horizontal"])
    cell = data["base_cells"]["100,101"]
    assert set(cell["prisms"]) == {"0,1,3", "0,2,3", "1,3,4"}
    for entry in cell["prisms"].values():
        assert entry["residual_zero"]
        assert "C" in entry and "H" in entry and "D" in entry
    for hs in cell["H_S"].values():
        assert hs["descent_verified"]


def test_cmd_primitive_validation_error(tmp_path, capsys):
    cpath, mpath, _ = _write_fixture_files(tmp_path)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"forms": [{"cell": [0, 5], "terms": []}]}))
    out = tmp_path / "h.json"
    code = main(["primitive", "--complex", str(cpath), "--morphism", str(mpath),
                 "--form", str(bad), "--out", str(out)])
    assert code == 2


def test_cmd_check_corrupted_fixture_exit2(tmp_path):
    cpath = tmp_path / "c.json"
    cpath.write_text("{not json")
    code = main(["sheaf", "--complex", str(cpath), "--morphism", str(cpath)])
    assert code == 2


def test_cmd_primitive_oracle(tmp_path, capsys):
    cpath, mpath, wpath = _write_fixture_files(tmp_path, pairs=((2, 3),))
    out = tmp_path / "h.json"
    code = main(["primitive", "--complex", str(cpath), "--morphism", str(mpath),
                 "--form", str(wpath), "--out", str(out),
                 "--oracle-eps", "1e-4"])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["oracle"]
    assert all(entry["abs_error"] < 1e-6 for entry in data["oracle"])


def test_form_from_dict_accumulates_repeated_wedges():
    dd = {"context": {"groups": [{"tag": "l", "vertices": [0, 1, 2]}]},
          "terms": [
              {"dvars": ["l:1"], "poly": [{"c": "1", "exp": {"l:0": 1}}]},
              {"dvars": ["l:1"], "poly": [{"c": "1", "exp": {"l:2": 1}}]},
          ]}
    form = form_from_dict(dd)
    sc = form.ctx
    expect = Form(sc, {(sc.var("l", 1),):
                       Poly.variable(sc, sc.var("l", 0))
                       + Poly.variable(sc, sc.var("l", 2))})
    assert form == expect


def test_cmd_primitive_incompatible_family_exit2(tmp_path):
    cpath, mpath, _ = _write_fixture_files(tmp_path)
    # a family that disagrees on the shared edge (2,3)
    bad = {"forms": [
        {"cell": [0, 2, 3], "terms": [
            {"dvars": ["l:3"], "poly": [{"c": "1", "exp": {"l:2": 1}}]},
            {"dvars": ["l:2"], "poly": [{"c": "1", "exp": {"l:3": 1}}]}]},
        {"cell": [0, 1, 3], "terms": []},
        {"cell": [1, 3, 4], "terms": []},
        {"cell": [2, 3, 5], "terms": []},
        {"cell": [3, 4, 5], "terms": []},
    ]}
    wpath = tmp_path / "incompatible.json"
    wpath.write_text(json.dumps(bad))
    out = tmp_path / "h.json"
    code = main(["primitive", "--complex", str(cpath), "--morphism", str(mpath),
                 "--form", str(wpath), "--out", str(out)])
    assert code == 2


def test_primitive_output_is_self_contained(tmp_path):
    # the residual can be re-verified from the output file alone
    from fractions import Fraction
    from prismal.forms import canonicalize, d, de_form, pullback, wedge
    from prismal.primitive import restrict_input
    from prismal.sheaf import psi_coordinate_map

    cpath, mpath, wpath = _write_fixture_files(tmp_path)
    out = tmp_path / "h.json"
    assert main(["primitive", "--complex", str(cpath), "--morphism", str(mpath),
                 "--form", str(wpath), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    f = triangle_fan()
    omega = forms_file_to_inputs(json.loads(wpath.read_text()), f.source)
    for tau_key, cell in data["base_cells"].items():
        for sig_key, entry in cell["prisms"].items():
            sigma = Simplex(tuple(int(v) for v in sig_key.split(",")))
            H = form_from_dict(entry["H"])
            psi = psi_coordinate_map(f, sigma)
            eta = restrict_input(omega, sigma)
            residual = canonicalize(
                wedge(de_form(psi.source), pullback(psi, eta) - d(H)))
            assert residual.is_zero
