import csv
import json
import math
import subprocess
import sys

import pytest

from unitfree.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- check ----------------------------------------------------------------

def test_check_contact_passes(capsys):
    code, out, _ = run(capsys, "check", "contact3.json")
    assert code == 0
    assert "FAIL" not in out
    assert out.strip().endswith("result: PASS")


def test_check_nonintegrable_fails_with_witness(capsys):
    code, out, _ = run(capsys, "check", "nonintegrable.json", "--json")
    assert code == 1
    doc = json.loads(out)
    integ = next(c for c in doc["checks"] if c["name"] == "integrability")
    assert not integ["passed"]
    w = integ["witness"]["point"]["w"]
    assert integ["worst"] == pytest.approx(abs(w), rel=1e-12)
    assert doc["seed"] == 0 and doc["points"] == 100


def test_check_poisson_passes(capsys):
    assert run(capsys, "check", "poisson2")[0] == 0


def test_check_missing_file(capsys):
    code, _, err = run(capsys, "check", "no-such-file.json")
    assert code == 2
    assert "no such file" in err


@pytest.mark.parametrize("doc, fragment", [
    ({"chart": {"coords": ["q", "p"]}, "pi": {"p,q": "1"}}, "upper triangle"),
    ({"chart": {"coords": ["q", "p"]}, "pi": {"q,p": "1 +"}}, "pi[q,p]"),
    ({"chart": {"coords": ["q", "p"]}, "r": ["0"]}, "r must"),
    ({"chart": {"coords": ["q", "p"]}, "pi": {"q,w": "1"}}, "not a coordinate"),
    ({"chart": {"coords": ["q", "p"]}, "hamiltonians": {"h": "tanh(q)"}}, "tanh"),
    ({"pi": {}}, "chart"),
])
def test_check_rejects_bad_descriptions(tmp_path, capsys, doc, fragment):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "check", str(path))
    assert code == 2
    assert fragment in err


def test_check_rejects_invalid_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert run(capsys, "check", str(path))[0] == 2


def test_check_is_deterministic(capsys):
    first = run(capsys, "check", "contact3", "--json", "--points", "20", "--seed", "4")
    second = run(capsys, "check", "contact3", "--json", "--points", "20", "--seed", "4")
    assert first == second
    assert json.loads(first[1])["seed"] == 4


def test_unknown_option_is_a_usage_error(capsys):
    assert run(capsys, "check", "contact3", "--bogus")[0] == 2
    assert run(capsys)[0] == 2


# --- flow -----------------------------------------------------------------

def test_flow_oscillator_csv(tmp_path, capsys):
    out = tmp_path / "osc.csv"
    code, text, _ = run(capsys, "flow", "contact3", "--hamiltonian", "oscillator", "--x0", "1,0,0",
                        "--dt", "1e-3", "--t-end", repr(2 * math.pi), "--out", str(out))
    assert code == 0
    assert "max_residual=" in text
    rows = _rows(out)
    assert rows[0] == ["t", "q", "p", "z", "h", "residual"]
    last = [float(v) for v in rows[-1]]
    assert abs(last[1] - 1) <= 1e-6
    assert abs(last[0] - 2 * math.pi) <= 1e-15
    for cell in rows[1]:
        assert cell == "%.17g" % float(cell)


def test_flow_damped_energy(tmp_path, capsys):
    out = tmp_path / "damped.csv"
    code, _, _ = run(capsys, "flow", "damped-oscillator", "--hamiltonian", "damped", "--t-end", "10",
                     "--out", str(out))
    assert code == 0
    last = _rows(out)[-1]
    t, h = float(last[0]), float(last[4])
    assert abs(h - 0.5 * math.exp(-0.5 * t)) <= 1e-5


def test_flow_to_stdout_is_deterministic(capsys):
    a = run(capsys, "flow", "contact3", "--hamiltonian", "pendulum", "--t-end", "0.1")
    b = run(capsys, "flow", "contact3", "--hamiltonian", "pendulum", "--t-end", "0.1")
    assert a == b
    assert a[1].startswith("t,q,p,z,h,residual\n")
    assert "max_residual" in a[2]


@pytest.mark.parametrize("argv", [
    ["--hamiltonian", "oscillator", "--x0", "1,0"],
    ["--hamiltonian", "oscillator", "--x0", "1,zero,0"],
    ["--hamiltonian", "missing"],
    ["--hamiltonian", "oscillator", "--dt", "0"],
    [],
])
def test_flow_config_errors(capsys, argv):
    assert run(capsys, "flow", "contact3", *argv)[0] == 2


def test_flow_step_failure(tmp_path, capsys):
    code, _, err = run(capsys, "flow", "contact3", "--hamiltonian", "oscillator", "--max-steps", "3",
                       "--out", str(tmp_path / "x.csv"))
    assert code == 1
    assert "max_steps" in err


def test_flow_residual_above_tolerance(capsys):
    code, _, err = run(capsys, "flow", "contact3", "--hamiltonian", "damped", "--dt", "0.1", "--t-end", "2",
                       "--tol", "1e-12")
    assert code == 1
    assert "FAIL" in err


# --- product --------------------------------------------------------------

def test_product_contact_pair(capsys):
    code, out, _ = run(capsys, "product", "contact3", "contact3", "--points", "50", "--tol", "1e-8")
    assert code == 0
    assert "E8" in out and "symbol right on ratio" in out


def test_product_poisson_pair_has_no_reeb_field(capsys):
    code, out, _ = run(capsys, "product", "poisson2", "poisson2", "--json", "--points", "30")
    assert code == 0
    assert set(json.loads(out)["r12"].split(",")) == {"0"}


def test_product_corrupted(capsys):
    code, out, _ = run(capsys, "product", "contact3", "contact3", "--corrupt", "--points", "30")
    assert code == 1
    assert "FAIL  product" in out


def test_product_rejects_nonintegrable_factor(capsys):
    code, _, err = run(capsys, "product", "contact3", "nonintegrable")
    assert code == 2
    assert "integrability" in err


# --- coiso ----------------------------------------------------------------

def test_coiso_zero_section(capsys):
    code, out, _ = run(capsys, "coiso", "contact3", "--constraints", "zero_section",
                       "--surface-points", "contact3-zero-section-points.json")
    assert code == 0
    assert "bracket_condition: PASS" in out


def test_coiso_origin_fibre(capsys):
    code, out, _ = run(capsys, "coiso", "contact3", "--constraints", "origin_fibre",
                       "--surface-points", "contact3-origin-fibre-points.json", "--json")
    assert code == 1
    wit = json.loads(out)["checks"][0]["witness"]
    assert wit["pair"] == ["q", "p"] and wit["value"] == -1.0


def test_coiso_off_surface(tmp_path, capsys):
    pts = tmp_path / "pts.json"
    pts.write_text(json.dumps({"points": [{"q": 0.1, "p": 0.2, "z": 0.5}]}))
    code, _, err = run(capsys, "coiso", "contact3", "--constraints", "zero_section", "--surface-points", str(pts))
    assert code == 2
    assert "exceeds tol" in err


def test_coiso_unknown_constraint(capsys):
    assert run(capsys, "coiso", "contact3", "--constraints", "nope",
               "--surface-points", "contact3-zero-section-points.json")[0] == 2


# --- misc -----------------------------------------------------------------

def test_bundled_listing(capsys):
    code, out, _ = run(capsys, "bundled")
    assert code == 0
    assert out.split() == ["contact3.json", "damped-oscillator.json", "nonintegrable.json", "poisson2.json"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "unitfree", "check", "poisson2", "--points", "10"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "result: PASS" in proc.stdout
