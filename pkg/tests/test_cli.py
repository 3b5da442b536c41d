"""Command line interface: artifacts, determinism, exit codes."""

import json
import math

import numpy as np
import pytest

from levysup.cli import main


def _read_csv(path):
    comments, header, rows = [], None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line)
            elif header is None:
                header = line.split(",")
            else:
                rows.append([float(v) for v in line.split(",")])
    return comments, header, np.array(rows)


def test_density_csv_artifact(tmp_path):
    out = tmp_path / "q.csv"
    code = main(["density", "--family", "cauchy", "--time", "1.0",
                 "--grid", "log:0.1:10:25", "--output", str(out)])
    assert code == 0
    comments, header, rows = _read_csv(out)
    assert header == ["x", "density"]
    assert rows.shape == (25, 2)
    assert np.all(rows[:, 1] > 0.0)
    assert any("command:" in c for c in comments)
    assert any("model:" in c for c in comments)


def test_marginal_matches_library(tmp_path):
    out = tmp_path / "m.csv"
    code = main(["marginal", "--family", "brownian", "--time", "1.0",
                 "--grid", "0.5:2.0:4", "--output", str(out)])
    assert code == 0
    _, _, rows = _read_csv(out)
    want = math.sqrt(2.0 / math.pi) * np.exp(-rows[:, 0] ** 2 / 2.0)
    np.testing.assert_allclose(rows[:, 1], want, rtol=1e-9)


def test_arcsine_artifact(tmp_path):
    out = tmp_path / "a.csv"
    code = main(["arcsine", "--family", "cauchy", "--time", "1.0",
                 "--grid", "0.1:0.9:5", "--output", str(out)])
    assert code == 0
    _, _, rows = _read_csv(out)
    want = 1.0 / (math.pi * np.sqrt(rows[:, 0] * (1.0 - rows[:, 0])))
    np.testing.assert_allclose(rows[:, 1], want, rtol=1e-10)


def test_arcsine_grid_domain_checked(tmp_path):
    code = main(["arcsine", "--family", "cauchy", "--time", "1.0",
                 "--grid", "0.5:1.5:4", "--output", str(tmp_path / "x.csv")])
    assert code == 2


def test_identity_json_passes(tmp_path):
    out = tmp_path / "id.json"
    code = main(["identity", "--family", "brownian", "--drift", "0.3",
                 "--check", "kappa", "--output", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["passed"] is True
    assert payload["checks"]["kappa"]["passed"] is True


def test_identity_failure_exit_code(tmp_path):
    out = tmp_path / "id.json"
    # impossible tolerance forces a failing check and exit code 1
    code = main(["identity", "--family", "cauchy", "--check", "kappa",
                 "--tolerance", "1e-15", "--output", str(out)])
    assert code == 1
    assert json.loads(out.read_text())["passed"] is False


def test_identity_skips_unavailable_closed_form(tmp_path):
    out = tmp_path / "id.json"
    code = main(["identity", "--family", "stable", "--alpha", "1.5",
                 "--rho", "0.55", "--check", "kappa", "--output", str(out)])
    assert code == 0
    assert "skipped" in json.loads(out.read_text())["checks"]["kappa"]


def test_validate_brownian(tmp_path):
    out = tmp_path / "v.json"
    code = main(["validate", "--family", "brownian", "--drift", "0.5",
                 "--paths", "4000", "--steps", "200", "--seed", "7",
                 "--ks-tolerance", "0.05", "--output", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["checks"]["joint_mass"]["passed"] is True
    assert payload["checks"]["sup_ks"]["passed"] is True


def test_validate_failure_exit_code(tmp_path):
    out = tmp_path / "v.json"
    code = main(["validate", "--family", "brownian", "--paths", "2000",
                 "--steps", "100", "--seed", "3",
                 "--ks-tolerance", "1e-9", "--output", str(out)])
    assert code == 1


def test_validate_cpp_atom(tmp_path):
    out = tmp_path / "v.json"
    code = main(["validate", "--family", "cpp", "--drift", "-1.0",
                 "--rate", "1.0", "--jump-scale", "1.0",
                 "--jump-sign", "positive", "--paths", "50000",
                 "--seed", "9", "--output", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["checks"]["atom_mass"]["passed"] is True


def test_simulate_reruns_byte_identical(tmp_path):
    out = tmp_path / "s.csv"
    args = ["simulate", "--family", "cauchy", "--paths", "100",
            "--steps", "50", "--seed", "5", "--output", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_simulate_env_seed_fallback(tmp_path, monkeypatch):
    out1 = tmp_path / "s1.csv"
    out2 = tmp_path / "s2.csv"
    main(["simulate", "--family", "cauchy", "--paths", "50", "--steps", "20",
          "--seed", "11", "--output", str(out1)])
    monkeypatch.setenv("LEVYSUP_SEED", "11")
    main(["simulate", "--family", "cauchy", "--paths", "50", "--steps", "20",
          "--output", str(out2)])
    _, _, rows1 = _read_csv(out1)
    _, _, rows2 = _read_csv(out2)
    np.testing.assert_array_equal(rows1, rows2)


def test_simulate_bridge_flag(tmp_path):
    out = tmp_path / "b.csv"
    code = main(["simulate", "--family", "brownian", "--drift", "0.5",
                 "--paths", "200", "--steps", "64", "--seed", "1",
                 "--bridge", "--output", str(out)])
    assert code == 0
    _, header, rows = _read_csv(out)
    assert header == ["g", "max", "terminal"]
    assert rows.shape == (200, 3)
    assert np.all(rows[:, 1] >= rows[:, 2])


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as err:
        main(["density", "--family", "cauchy", "--time", "1.0",
              "--grid", "nonsense"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["nosuchcommand"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["density", "--family", "pareto", "--time", "1.0",
              "--grid", "0:1:5"])
    assert err.value.code == 2


def test_unsupported_model_exit_two(capsys):
    # sensible message, not a traceback, for catalog gaps
    code = main(["density", "--family", "stable", "--alpha", "1.5",
                 "--rho", "0.55", "--time", "1.0", "--grid", "0.1:1:5"])
    assert code == 2
    assert "unsupported" in capsys.readouterr().err.lower()


def test_density_side_flag(tmp_path):
    up = tmp_path / "up.csv"
    down = tmp_path / "down.csv"
    main(["density", "--family", "brownian", "--drift", "0.8", "--time",
          "1.0", "--side", "max", "--grid", "0.5:2:4", "--output", str(up)])
    main(["density", "--family", "brownian", "--drift", "0.8", "--time",
          "1.0", "--side", "drawdown", "--grid", "0.5:2:4", "--output",
          str(down)])
    _, _, rup = _read_csv(up)
    _, _, rdown = _read_csv(down)
    # upward drift: mass concentrates on the maximum side
    assert rup[:, 1].sum() > rdown[:, 1].sum()
