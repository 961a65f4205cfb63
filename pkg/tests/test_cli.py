import csv
import json

import numpy as np
import pytest

from sufeller.analysis import AnalysisConfig, analyze
from sufeller.cli import main
from sufeller.document import (DocumentBuilder, DocumentInvalid, DocumentParseError, decode_array,
                               encode_array, parse_document, read_document)
from sufeller.harness import generators as gen
from sufeller.harness.documents import recipe_document
from sufeller.kernels import JointMeasure, KernelFamily
from sufeller.space import FiniteMetricSpace

N = 20


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def space_doc(metric, **extra):
    doc = {"format_version": "1",
           "spaces": {"S": {"point_ids": ["a", "b", "c"], "metric": [[repr(x) for x in r] for r in metric]}}}
    doc.update(extra)
    return doc


def fixture_doc(tmp_path):
    path = str(tmp_path / "fixture.json")
    assert main(["generate", "--recipe", "indicator_example", "--seed", "1", "--out", path]) == 0
    return path


def fresh_fixture(tmp_path, capsys):
    path = fixture_doc(tmp_path)
    capsys.readouterr()
    return path


def constant_doc(tmp_path, n=3):
    s1 = FiniteMetricSpace.on_line([0.0, 1.0], ["x0", "x1"])
    s2 = FiniteMetricSpace.on_line([0.0, 2.0, 3.0], ["y0", "y1", "y2"])
    P = JointMeasure(s1, s2, np.full((2, 3), 1 / 6))
    b = DocumentBuilder()
    b.family(KernelFamily([P] * n, P), name="const")
    path = str(tmp_path / "const.json")
    b.write(path)
    return path


# --- document format ---------------------------------------------------------

def test_floats_round_trip_exactly():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 5)) * 10.0 ** rng.integers(-300, 300, (4, 5))
    assert np.array_equal(decode_array(json.loads(json.dumps(encode_array(a)))), a)


def test_parse_errors():
    with pytest.raises(DocumentParseError):
        parse_document([])
    with pytest.raises(DocumentParseError):
        parse_document({"format_version": "0"})


def test_invalid_collects_every_problem():
    raw = space_doc([[0, 1, 5], [1, 0, 1], [5, 1, 0]],
                    test_sets={"O": {"space": "T", "members": ["a"]}}, extra={})
    with pytest.raises(DocumentInvalid) as exc:
        parse_document(raw)
    text = "\n".join(exc.value.diagnostics)
    assert "$.spaces.S.metric: triangle" in text and "(0,1,2)" in text
    assert "unresolved reference 'T'" in text
    assert "$.extra: unknown section" in text


def test_builder_round_trip_is_bitwise(tmp_path):
    b = gen.indicator_example_bundle(N)
    doc = recipe_document(gen.InstanceRecipe(1, (3, 3, N), "indicator_example"))
    path = str(tmp_path / "doc.json")
    doc.write(path)
    back = read_document(path)
    (name, F), = back.targets()
    funcs, sets, base = back.witnesses_for(F)
    assert np.array_equal(F.differences(), b.family.differences())
    cfg = AnalysisConfig(**{k: back.config[k] for k in ("epsilon", "window") if k in back.config})
    mem = analyze(b.family, b.functions, b.sets, b.bases["avoiding"], cfg)
    disk = analyze(F, funcs, sets, base, cfg)
    assert mem.to_dict() == disk.to_dict()
    assert mem.semi_uniform_feller is True


@pytest.mark.parametrize("construction", gen.CONSTRUCTIONS)
def test_every_recipe_writes_a_valid_document(tmp_path, construction):
    path = str(tmp_path / f"{construction}.json")
    assert main(["generate", "--recipe", construction, "--seed", "3", "--sizes", "2,3,6", "--out", path]) == 0
    assert main(["validate", path]) == 0
    assert read_document(path).targets()


def test_generated_documents_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["generate", "--recipe", "tv_converging_mixture", "--seed", "5", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


# --- validate ----------------------------------------------------------------

def test_validate_exit_codes(tmp_path, capsys):
    assert main(["validate", fixture_doc(tmp_path)]) == 0
    bad = write(tmp_path, "tri.json", space_doc([[0, 1, 5], [1, 0, 1], [5, 1, 0]]))
    assert main(["validate", bad]) == 1
    assert "'a'" in capsys.readouterr().err
    dangling = write(tmp_path, "ref.json", space_doc([[0, 1, 2], [1, 0, 1], [2, 1, 0]],
                                                     sequences={"q": {"space": "nope", "entries": ["a"],
                                                                      "limit": "b"}}))
    assert main(["validate", dangling]) == 1
    assert "unresolved reference" in capsys.readouterr().err
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert main(["validate", str(broken)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_triangle_diagnostic_names_the_triple(tmp_path, capsys):
    bad = write(tmp_path, "tri.json", space_doc([[0, 1, 5], [1, 0, 1], [5, 1, 0]]))
    main(["validate", bad])
    err = capsys.readouterr().err
    assert "$.spaces.S.metric" in err and "d('a','c') > d('a','b') + d('b','c')" in err


# --- analyze -----------------------------------------------------------------

def test_analyze_fixture_report(tmp_path):
    doc = fixture_doc(tmp_path)
    out = str(tmp_path / "rep.json")
    assert main(["analyze", doc, "--report", out]) == 0
    rep = json.loads(open(out).read())
    (fam,) = rep["families"].values()
    assert fam["semi_uniform_feller"] is True
    assert fam["full_tv"] == "not_vanishing"
    with open(tmp_path / "rep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["condition", "witness_id", "n", "gap"]
    assert {r[0] for r in rows[1:]} >= {"a", "b", "c", "d", "e", "tv_marginal", "tv_full", "asskern"}


def test_analyze_constant_family(tmp_path, capsys):
    assert main(["analyze", constant_doc(tmp_path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    fam = rep["families"]["const"]
    assert fam["semi_uniform_feller"] is True
    assert set(fam["conditions"].values()) == {"vanishing"}


def test_analyze_single_condition(tmp_path, capsys):
    assert main(["analyze", fresh_fixture(tmp_path, capsys), "--conditions", "b"]) == 0
    fam, = json.loads(capsys.readouterr().out)["families"].values()
    assert fam["semi_uniform_feller"] is None
    assert list(fam["conditions"]) == ["b"]
    assert fam["hypotheses"]["marginal_tv"] == "vanishing"
    assert {s["condition"] for s in fam["series"]} <= {"b", "tv_marginal", "tv_full", "asskern"}


def test_analyze_flags_override_document(tmp_path, capsys, monkeypatch):
    doc = fresh_fixture(tmp_path, capsys)
    monkeypatch.setenv("SUFELLER_EPSILON", "0.5")
    main(["analyze", doc, "--conditions", "a"])
    fam, = json.loads(capsys.readouterr().out)["families"].values()
    assert fam["config"]["epsilon"] == "0.5"
    main(["analyze", doc, "--conditions", "a", "--epsilon", "0.25", "--window", "4"])
    fam, = json.loads(capsys.readouterr().out)["families"].values()
    cfg = fam["config"]
    assert cfg["epsilon"] == "0.25" and cfg["window"] == 4


def test_analyze_oracle_on(tmp_path, capsys):
    assert main(["analyze", fixture_doc(tmp_path), "--oracle", "on"]) == 0


def test_oracle_refused_for_large_s2(tmp_path, capsys):
    s1 = FiniteMetricSpace.on_line([0.0], ["x"])
    s2 = FiniteMetricSpace.on_line(np.arange(17.0))
    P = JointMeasure(s1, s2, np.full((1, 17), 1 / 17))
    b = DocumentBuilder()
    b.family(KernelFamily([P] * 3, P))
    path = str(tmp_path / "big.json")
    b.write(path)
    assert main(["analyze", path, "--oracle", "on"]) == 2
    assert "exceeds 16" in capsys.readouterr().err
    assert main(["analyze", path]) == 0


def test_analyze_usage_errors(tmp_path):
    doc = constant_doc(tmp_path)
    assert main(["analyze", doc, "--conditions", "z"]) == 2
    assert main(["analyze", doc, "--oracle", "maybe"]) == 2


# --- kr, generate, verify -----------------------------------------------------

def test_kr_command(tmp_path, capsys):
    path = write(tmp_path, "s.json", space_doc([[0, 0.5, 3], [0.5, 0, 3], [3, 3, 0]]))
    assert main(["kr", path, "--space", "S", "--mu", "1,0,0", "--nu", "0,1,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert float(out["kr"]) == pytest.approx(0.5, abs=1e-9)
    assert main(["kr", path, "--space", "T", "--mu", "1,0,0", "--nu", "0,1,0"]) == 1
    assert main(["kr", path, "--space", "S", "--mu", "1,x,0", "--nu", "0,1,0"]) == 2


def test_generate_errors(tmp_path):
    out = str(tmp_path / "x.json")
    assert main(["generate", "--recipe", "nonsense", "--out", out]) == 2
    assert main(["generate", "--recipe", "indicator", "--sizes", "1,2", "--out", out]) == 2


def test_verify_small(tmp_path, capsys):
    report = str(tmp_path / "suites.json")
    assert main(["verify", "--suite", "asskern", "--trials", "3", "--report", report]) == 0
    assert json.loads(open(report).read())[0]["ok"] is True
    assert "asskern" in capsys.readouterr().out
    assert main(["verify", "--suite", "nope"]) == 2
    assert main(["verify", "--suite", "asskern", "--trials", "0"]) == 2


def test_no_command_is_usage_error():
    assert main([]) == 2
