"""Case configuration, reference tables and the command line front end."""

import json

import numpy as np
import pytest

from conftest import make_case
from xigaplate import cli
from xigaplate.config import ConfigError, parse_config
from xigaplate.reference import ReferenceTable, compare, list_references, load_reference
from xigaplate.solve import NumericalError


def write_case(tmp_path, name="case", **over):
    d = make_case(name=name, **over)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(d))
    return path


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------

@pytest.mark.parametrize("over, field", [
    ({"geometry": {"kind": "square"}}, "geometry.L"),
    ({"geometry": {"kind": "torus"}}, "geometry.kind"),
    ({"thickness": {}}, "thickness"),
    ({"material": {"ceramic": "unobtainium"}}, "material.ceramic"),
    ({"material": {"n": -1}}, "material.n"),
    ({"mesh": {"p": 1}}, "mesh.p"),
    ({"normalization": "annular_tilde"}, "normalization"),
    ({"crack": {"template": "spiral"}}, "crack.template"),
    ({"boundary": "symmetric-half"}, "boundary"),
    ({"n_modes": 0}, "n_modes"),
    ({"schema": "v0"}, "schema"),
])
def test_malformed_config_names_field(over, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(make_case(**over))


def test_malformed_config_exit_code(tmp_path, capsys):
    path = write_case(tmp_path, mesh={"p": 1})
    assert cli.main(["run", str(path)]) == 2
    out = capsys.readouterr()
    assert "mesh.p" in out.out + out.err


def test_invalid_json_and_missing_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli.main(["run", str(bad)]) == 2
    assert cli.main(["run", str(tmp_path / "nope.json")]) == 2
    assert cli.main(["sweep", str(tmp_path / "nowhere")]) == 2


def test_bundled_cases_parse():
    names = cli.bundled_cases()
    assert len(names) == 59
    for n in names:
        cfg = cli.resolve_case(n)
        assert cfg.reference["table"] in list_references()
        load_reference(cfg.reference["table"]).values(cfg.reference["key"])


# ----------------------------------------------------------------------
# reference tables and comparison
# ----------------------------------------------------------------------

def test_exact_values_pass_with_zero_error():
    t = load_reference("table2_xiga_tsdt")
    rep = compare(t.values("a/L=0.5"), t, "a/L=0.5")
    assert rep.passed and all(m.rel_error == 0 for m in rep.modes)
    assert rep.modes[0].reference == 17.8989
    assert rep.lines()[0].startswith("PASS table2_xiga_tsdt[a/L=0.5] mode=1")


def test_twice_tolerance_fails_that_mode():
    t = load_reference("table2_xiga_tsdt")
    vals = np.array(t.values("a/L=0.8"))
    vals[1] *= 1 + 2 * t.tolerance_for("a/L=0.8")
    rep = compare(vals, t, "a/L=0.8")
    assert not rep.passed
    assert [m.passed for m in rep.modes] == [True, False, True, True, True]
    assert rep.lines()[1].startswith("FAIL")


def test_table4_report_has_25_rows():
    t = load_reference("table4_xiga_tsdt")
    lines = [ln for k in t.keys for ln in compare(t.values(k), t, k).lines()]
    assert len(lines) == 25


def test_reference_validation():
    with pytest.raises(ValueError):
        ReferenceTable("x", "", "rad_s", 0.01, (("k", 1, -1.0),))
    with pytest.raises(ValueError):
        ReferenceTable("x", "", "rad_s", 0.01, (("k", 1, 1.0), ("k", 1, 2.0)))
    with pytest.raises(KeyError):
        load_reference("table9")
    with pytest.raises(KeyError):
        load_reference("table2_xiga_tsdt").values("a/L=0.3")


def test_printed_values_spot_check():
    assert load_reference("table2_xiga_tsdt").values("a/L=0.8")[1] == 29.1186
    assert load_reference("table5_xiga_p3").values("n=0")[0] == 2.6288
    assert load_reference("table6_xiga").values("R/h=5,r/R=0.2")[0] == 1.0877
    assert load_reference("table6_xiga").tolerance == 0.03


def _csv(tmp_path, values, convention):
    p = tmp_path / "res.csv"
    rows = ["mode,omega_rad_s,normalized,convention"]
    rows += [f"{k},{v:.12e},{v:.12e},{convention}" for k, v in enumerate(values, 1)]
    p.write_text("\n".join(rows) + "\n")
    return p


def test_compare_command(tmp_path, capsys):
    t = load_reference("table2_xiga_tsdt")
    p = _csv(tmp_path, t.values("a/L=0.5"), t.convention)
    assert cli.main(["compare", str(p), "table2_xiga_tsdt", "--key", "a/L=0.5"]) == 0
    # key missing from the table
    assert cli.main(["compare", str(p), "table2_xiga_tsdt", "--key", "a/L=0.3"]) == 1
    assert "FAIL" in capsys.readouterr().out
    # key from the sidecar
    p.with_suffix(".meta.json").write_text(json.dumps({"reference": {"table": "t", "key": "a/L=0.5"}}))
    assert cli.main(["compare", str(p), "table2_xiga_tsdt"]) == 0
    # convention mismatch is an input error
    q = _csv(tmp_path, t.values("a/L=0.5"), "hsdt_bar")
    assert cli.main(["compare", str(q), "table2_xiga_tsdt", "--key", "a/L=0.5"]) == 2


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def test_run_writes_outputs(tmp_path, capsys):
    path = write_case(tmp_path, mesh={"n_el": 5},
                      output={"frequencies": "out/f.csv",
                              "mode_grids": {"dir": "out", "modes": [1], "n": 9}})
    assert cli.main(["run", str(path)]) == 0
    assert (tmp_path / "out/f.csv").read_text().count("\n") == 6
    meta = json.loads((tmp_path / "out/f.meta.json").read_text())
    assert meta["mesh"] == "5x5 p=3"
    grid = np.loadtxt(tmp_path / "out/case_mode1.csv", delimiter=",", skiprows=1)
    assert grid.shape == (81, 3)
    assert "case:" in capsys.readouterr().out


def test_dump_mesh(tmp_path, capsys):
    path = write_case(tmp_path, mesh={"n_el": 2})
    assert cli.main(["dump-mesh", str(path)]) == 0
    text = capsys.readouterr().out
    assert "degrees 3 3" in text
    out = tmp_path / "net.txt"
    assert cli.main(["dump-mesh", str(path), "-o", str(out)]) == 0
    assert out.read_text() == text


def test_dump_matrices(tmp_path):
    path = write_case(tmp_path, mesh={"n_el": 3}, crack={"template": "center", "ratio": 0.5})
    assert cli.main(["dump-matrices", str(path), "-o", str(tmp_path / "m")]) == 0
    lines = (tmp_path / "m/case_K.txt").read_text().splitlines()
    _, kind, n, m, nnz = lines[0].split()
    assert kind == "symmetric" and n == m and int(nnz) == len(lines) - 1
    i, j = np.loadtxt(lines[1:], usecols=(0, 1), dtype=int).T
    assert np.all(i <= j) and j.max() < int(n)


def test_sweep_reports_each_case(tmp_path, capsys):
    write_case(tmp_path, "a", mesh={"n_el": 4})
    write_case(tmp_path, "b", mesh={"p": 1})
    assert cli.main(["sweep", str(tmp_path)]) == 2
    out = capsys.readouterr().out
    assert "a:" in out and "ERROR" in out and "sweep: 1/2 cases passed" in out


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise NumericalError("eigensolver did not converge")
    monkeypatch.setattr("xigaplate.config.solve_modal", boom)
    assert cli.main(["run", str(write_case(tmp_path, mesh={"n_el": 3}))]) == 3


def test_cases_listing(capsys):
    assert cli.main(["cases"]) == 0
    assert "table2_tsdt_a05" in capsys.readouterr().out.split()


# ----------------------------------------------------------------------
# bundled benchmark cases
# ----------------------------------------------------------------------

@pytest.mark.parametrize("name, mode1, tol", [
    ("table2_tsdt_a05", 17.8989, 0.01),
    ("table5_p3_n0", 2.6288, 0.02),
])
def test_bundled_case_fundamental(tmp_path, capsys, name, mode1, tol):
    cli.main(["run", name, "--out", str(tmp_path)])
    csv = next(tmp_path.rglob("*.csv"))
    first = np.loadtxt(csv, delimiter=",", skiprows=1, usecols=2)[0]
    assert first == pytest.approx(mode1, rel=tol)
    assert f"mode=1 computed={first:.4f}" in capsys.readouterr().out
