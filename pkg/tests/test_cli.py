import csv
import io
import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from udcs.cli import main
from udcs.distspec import SpecError, parse_spec

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def spec_file(tmp_path, obj, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


GAUSS = {"family": "gaussian1d"}
SQUARE = {"family": "uniform_region",
          "region": {"shape": "box", "params": {"lower": [0, 0], "upper": [1, 1]}}}
ELLIPSE = {"family": "uniform_region",
           "region": {"shape": "ellipsoid",
                      "params": {"K": [[4 / 3, -2 / 3], [-2 / 3, 4 / 3]]}}}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# specs ---------------------------------------------------------------------

@pytest.mark.parametrize("obj", [
    GAUSS, SQUARE, ELLIPSE,
    {"family": "shifted_exponential", "params": {"a": 3}},
    {"family": "bell_unit", "params": {"theta": 0.25}},
    {"family": "bell_cosine", "params": {"theta": 0.7, "y_A": -1}},
])
def test_spec_roundtrip_and_schema(obj):
    s = parse_spec(obj)
    jsonschema.validate(s.to_dict(), schema("distribution_spec"))
    assert parse_spec(s.dumps()) == s
    s.build()


@pytest.mark.parametrize("obj,where", [
    ({"family": "cauchy"}, "family"),
    ({"family": "shifted_exponential"}, "params.a"),
    ({"family": "shifted_exponential", "params": {"a": "x"}}, "params.a"),
    ({"family": "gaussian1d", "params": {"mu": 1}}, "params.mu"),
    ({"family": "bell_cosine", "params": {"theta": 0, "y_A": 2}}, "params.y_A"),
    ({"family": "uniform_region"}, "region"),
    ({"family": "uniform_region", "region": {"shape": "disc", "params": {}}}, "region.shape"),
    ({"family": "uniform_region", "region": {"shape": "box", "params": {"lower": [0]}}},
     "region.params.upper"),
    ({"family": "gaussian1d", "colour": 1}, "colour"),
])
def test_spec_field_diagnostics(obj, where):
    with pytest.raises(SpecError) as e:
        parse_spec(obj)
    assert e.value.where == where


def test_spec_json_syntax_location():
    with pytest.raises(SpecError) as e:
        parse_spec('{\n  "family": "gaussian1d",\n}')
    assert e.value.where.startswith("line 3")


# exit codes --------------------------------------------------------------------

def test_help_and_usage(capsys):
    assert run(capsys, "--help")[0] == 0
    assert run(capsys)[0] == 2
    assert run(capsys, "encode")[0] == 2


def test_bad_spec_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "encode", spec_file(tmp_path, {"family": "nope"}),
                       "--out", tmp_path / "s")
    assert code == 2 and "family" in err


def test_missing_spec_exit_4(tmp_path, capsys):
    assert run(capsys, "explen", tmp_path / "absent.json")[0] == 4


def test_encode_failure_exit_3(tmp_path, capsys):
    code, _, err = run(capsys, "encode", spec_file(tmp_path, GAUSS), "--variant", "bounded",
                       "--out", tmp_path / "s", "--seed", 1)
    assert code == 3 and "encoding failed" in err


def test_unwritable_output_exit_4(tmp_path, capsys):
    code, _, _ = run(capsys, "encode", spec_file(tmp_path, GAUSS), "--count", 3,
                     "--out", tmp_path / "no" / "such" / "dir" / "s", "--seed", 1)
    assert code == 4


# encode / decode -----------------------------------------------------------------

def test_encode_square_bytes(tmp_path, capsys):
    out = tmp_path / "sq.udcs"
    code, stdout, _ = run(capsys, "encode", spec_file(tmp_path, SQUARE), "--count", 5,
                          "--out", out, "--seed", 3)
    assert code == 0
    data = out.read_bytes()
    assert data[:7] == b"UDCS\x01\x00\x02" and data[7:] == bytes([0xFF, 0xFE])
    rep = json.loads(stdout)
    jsonschema.validate(rep, schema("encode"))
    assert rep["mean_length"] == 3.0


def test_encode_decode_gaussian(tmp_path, capsys):
    spec = spec_file(tmp_path, GAUSS)
    a, b = tmp_path / "a.udcs", tmp_path / "b.udcs"
    code, stdout, _ = run(capsys, "encode", spec, "--count", 1000, "--seed", 7, "--out", a)
    assert code == 0
    rep = json.loads(stdout)
    assert abs(rep["mean_length"] - 7.06) <= 0.3
    assert run(capsys, "encode", spec, "--count", 1000, "--seed", 7, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()

    csv_a, csv_b = tmp_path / "a.csv", tmp_path / "b.csv"
    code, _, err = run(capsys, "decode", a, "--seed", 2, "--out", csv_a, "--ks-spec", spec)
    assert code == 0
    ks = json.loads(err.strip().splitlines()[-1])
    assert ks["count"] == 1000 and ks["p_value"] > 1e-3
    run(capsys, "decode", a, "--seed", 2, "--out", csv_b)
    assert csv_a.read_bytes() == csv_b.read_bytes()
    rows = list(csv.DictReader(io.StringIO(csv_a.read_text())))
    assert len(rows) == 1000
    r0 = rows[0]
    k, v = int(r0["k"]), int(r0["v1"])
    assert math.floor(math.ldexp(float(r0["x1"]), k)) == v


def test_decode_ks_gaussian(tmp_path, capsys):
    # 0.05 is near the 1% critical value at 1000 samples; 5000 makes it a real test
    spec = spec_file(tmp_path, GAUSS)
    a = tmp_path / "a.udcs"
    assert run(capsys, "encode", spec, "--count", 5000, "--seed", 7, "--out", a)[0] == 0
    code, _, err = run(capsys, "decode", a, "--seed", 2, "--out", tmp_path / "a.csv",
                       "--ks-spec", spec)
    assert code == 0
    assert json.loads(err.strip().splitlines()[-1])["ks_statistic"] < 0.05


def test_decode_truncated_exit_5(tmp_path, capsys):
    good = tmp_path / "g.udcs"
    run(capsys, "encode", spec_file(tmp_path, GAUSS), "--count", 50, "--seed", 1, "--out", good)
    data = good.read_bytes()
    bad = tmp_path / "t.udcs"
    # last byte cut and the one before replaced by zeros: an unfinished codeword
    bad.write_bytes(data[:-2] + b"\x00")
    code, _, err = run(capsys, "decode", bad, "--seed", 1)
    assert code == 5 and "offset" in err


def test_decode_bad_header_exit_5(tmp_path, capsys):
    p = tmp_path / "h"
    p.write_bytes(b"JUNK\x01\x00\x01\xff")
    assert run(capsys, "decode", p)[0] == 5


def test_decode_empty_body(tmp_path, capsys):
    p = tmp_path / "e"
    p.write_bytes(b"UDCS\x01\x00\x01")
    code, out, _ = run(capsys, "decode", p, "--seed", 0)
    assert code == 0 and out.strip().splitlines() == ["x1,k,v1"]


# analysis commands ---------------------------------------------------------------

def test_explen_json(tmp_path, capsys):
    outs = []
    for _ in range(2):
        code, out, _ = run(capsys, "explen", spec_file(tmp_path, GAUSS), "--k-max", 14)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    d = json.loads(outs[0])
    jsonschema.validate(d, schema("explen"))
    assert d["mean_length_lower"] <= d["mean_length_upper"]


def test_bounds_json(tmp_path, capsys):
    code, out, _ = run(capsys, "bounds", spec_file(tmp_path, GAUSS))
    d = json.loads(out)
    jsonschema.validate(d, schema("bounds"))
    assert d["bounds"]["thm2"]["value"] > 7.06


def test_erosion_json(tmp_path, capsys):
    spec = spec_file(tmp_path, SQUARE)
    code, out, _ = run(capsys, "erosion", spec, "--seed", 4)
    assert code == 0
    d = json.loads(out)
    jsonschema.validate(d, schema("erosion"))
    assert d["h"] == pytest.approx(1.5 * math.log2(math.e), abs=1e-3)
    assert run(capsys, "erosion", spec_file(tmp_path, GAUSS, "g.json"))[0] == 2


def test_lb_json(tmp_path, capsys):
    code, out, _ = run(capsys, "lb", spec_file(tmp_path, GAUSS), "--samples", 20000,
                       "--seed", 1)
    d = json.loads(out)
    jsonschema.validate(d, schema("lb"))
    assert d["D"] <= d["D_unnormalized"] <= 7.06
    code, _, _ = run(capsys, "lb", spec_file(tmp_path, GAUSS), "--k-lo", 0, "--k-hi", 2,
                     "--v-max", 1, "--samples", 2000)
    assert code == 2


def test_bell_experiment_json(tmp_path, capsys):
    args = ("bell", "experiment", "--theta-a", 0.7, "--theta-b", 1.9, "--rounds", 20000,
            "--seed", 9)
    code, out, _ = run(capsys, *args)
    assert code == 0 and run(capsys, *args)[1] == out
    d = json.loads(out)
    jsonschema.validate(d, schema("bell_experiment"))
    assert abs(d["estimate"] + math.cos(1.2)) < 4 / math.sqrt(20000)


def test_bell_sweep_csv(tmp_path, capsys):
    p = tmp_path / "sw.csv"
    code, _, err = run(capsys, "bell", "sweep", "--points", 8, "--k-max", 10, "--out", p)
    assert code == 0
    summary = json.loads(err.strip().splitlines()[-1])
    jsonschema.validate(summary, schema("bell_sweep"))
    rows = list(csv.DictReader(io.StringIO(p.read_text())))
    assert len(rows) == 8
    assert max(float(r["mean_length_upper"]) for r in rows) == pytest.approx(
        summary["max_mean_length_upper"])


@pytest.mark.slow
def test_figures(tmp_path, capsys):
    out = tmp_path / "figs"
    code, _, _ = run(capsys, "figures", out, "--points", 16)
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    jsonschema.validate(man, schema("manifest"))
    for name in man["files"]:
        assert (out / name).exists()
    g = json.loads((out / "example2_gaussian.json").read_text())
    assert abs(g["mean_length_lower"] - 7.06) <= 0.05
