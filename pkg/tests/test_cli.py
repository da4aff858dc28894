from __future__ import annotations

import json
import math

import pytest

from implicit_ode.cli import EXIT_DINI, EXIT_IO, EXIT_PARSE, EXIT_SOLVER, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_approximate_exponential(capsys):
    code, out, _ = run(capsys, "approximate", "--ode", "2*p - q", "--at", "0,1", "--solve-for", "q", "--order", "1,1")
    assert code == 0
    assert "y                 : exp(2 * x)" in out
    assert "q0        : 2.0" in out


def test_approximate_circle_psi(capsys):
    code, out, _ = run(capsys, "approximate", "--ode", "p^2+q^2-1", "--at", "pi/2,1,0", "--solve-for", "p", "--order", "1,2")
    assert code == 0
    assert "p = 1 - 0.5 * q^2" in out
    assert f"{1 - math.pi**2 / 8!r} + {math.pi / 2!r} * x - 0.5 * x^2" in out


def test_approximate_trivial(capsys):
    code, out, _ = run(capsys, "approximate", "--ode", "q - x", "--at", "0,0,0", "--solve-for", "q", "--order", "1,1")
    assert code == 0 and "y                 : 0.5 * x^2" in out


def test_json_mirror(capsys):
    code, out, _ = run(capsys, "approximate", "--ode", "2*p - q", "--at", "0,1", "--json")
    assert code == 0
    doc = json.loads(out)
    solution = dict(next(s["entries"] for s in doc["sections"] if s["name"] == "solution"))
    assert solution["d0"] == 2.0 and solution["y"] == "exp(2 * x)"


def test_series_trivial(capsys):
    code, out, _ = run(capsys, "series", "--ode", "q-1", "--at", "0,0", "--ic", "y=0", "--order", "1")
    assert code == 0
    assert "taylor coefficients : [0.0, 1.0]" in out and "matched        : yes" in out


def test_series_circle_switches_mode(capsys):
    code, out, _ = run(capsys, "series", "--ode", "p^2+q^2-1", "--at", "pi/2,1,0", "--order", "2")
    assert code == 0
    assert "[branch 2]" in out and "matched        : yes" in out
    assert "y2(x0)              : -1.0" in out and "y2(x0)              : 0.0" in out


def test_series_exponential(capsys):
    code, out, _ = run(capsys, "series", "--ode", "2*p - q", "--at", "0,1,2", "--order", "2")
    assert code == 0 and "[1.0, 2.0, 2.0]" in out and "matched        : yes" in out


def test_validate_example_2ter(capsys):
    code, out, _ = run(capsys, "validate", "--example", "2ter", "--samples", "101")
    assert code == 0
    line = next(l for l in out.splitlines() if "max |approx - exact|" in l)
    assert float(line.split(":")[1]) <= 0.003


def test_validate_example_1(capsys):
    code, out, _ = run(capsys, "validate", "--example", "1", "--interval=-1,1")
    assert code == 0
    line = next(l for l in out.splitlines() if "max residual" in l)
    assert float(line.split(":")[1]) <= 1e-12


def test_validate_degenerate_interval(capsys, tmp_path):
    path = tmp_path / "one.csv"
    code, out, _ = run(capsys, "validate", "--example", "1", "--interval", "0,0", "--csv", str(path))
    assert code == 0
    rows = path.read_text().splitlines()
    assert len(rows) == 2 and rows[1].endswith(",0")


def test_validate_solution_file(capsys, tmp_path):
    sol = tmp_path / "sol.txt"
    sol.write_text("sin(x)\n")
    code, out, _ = run(capsys, "validate", "--ode", "p^2+q^2-1", "--at", "pi/2,1,0", "--solve-for", "p",
                       "--solution-from", str(sol), "--interval", "0,pi")
    assert code == 0
    line = next(l for l in out.splitlines() if "max residual" in l)
    assert float(line.split(":")[1]) <= 1e-12


def test_example_1(capsys):
    code, out, _ = run(capsys, "example", "1")
    assert code == 0 and "exp(2 * x)" in out


def test_example_3_flags_quoted_value(capsys):
    code, out, _ = run(capsys, "example", "3")
    assert code == 0
    assert "[flags]" in out and repr(1.5 * math.sqrt(3)) in out


def test_example_4_csv(capsys, tmp_path):
    path = tmp_path / "fig2.csv"
    code, out, _ = run(capsys, "example", "4", "--R0", "0.1", "--csv", str(path))
    assert code == 0
    assert "0.1414213562373095" in out and "0.09146" in out
    data = path.read_bytes()
    assert data.startswith(b"t,radius_approx,radius_numeric,abs_error\n") and b"\r" not in data


def test_determinism(capsys, tmp_path):
    outputs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        code, out, _ = run(capsys, "example", "4", "--csv", str(path))
        assert code == 0
        outputs.append((out, path.read_bytes()))
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["approximate", "--ode", "2*p - ", "--at", "0,1"], EXIT_PARSE),
        (["approximate", "--ode", "2*p - q", "--at", "0,1,5"], EXIT_DINI),
        (["approximate", "--ode", "q^2 + p", "--at", "0,1"], EXIT_SOLVER),
        (["approximate", "--ode", "p - q^2", "--at", "0,0,0"], EXIT_DINI),
        (["example", "1", "--csv", "/nonexistent-dir/x.csv"], EXIT_IO),
    ],
)
def test_exit_codes(capsys, argv, expected):
    code, out, err = run(capsys, *argv)
    assert code == expected and err and not out


def test_bad_order_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["approximate", "--ode", "q", "--at", "0,0,0", "--order", "1"])
    assert exc.value.code == 2
