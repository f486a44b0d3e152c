import json
import os
import subprocess
import sys

import numpy as np
import pytest

from gaussflow import cli


def _run(args, tmp_path, env=None):
    full_env = dict(os.environ)
    full_env.pop(cli.OUT_ENV, None)
    full_env.update(env or {})
    return subprocess.run([sys.executable, "-m", "gaussflow", *args], cwd=tmp_path,
                          env=full_env, capture_output=True, text=True)


def _data_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return lines[0].split(","), [list(map(float, l.split(","))) for l in lines[1:]]


def test_atlas_d5_tangency(tmp_path):
    assert cli.main(["atlas", "--d", "5", "--out", str(tmp_path)]) == 0
    header, rows = _data_rows(tmp_path / "atlas_d5.csv")
    assert header == list(cli.atlas.REGION_COLUMNS)
    last = rows[-1]
    assert last[0] == pytest.approx(10 / 3) and last[1] == last[2] == pytest.approx(0.8, abs=1e-15)


def test_csv_header_and_precision(tmp_path):
    cli.main(["atlas", "--out", str(tmp_path), "--resolution", "3"])
    text = (tmp_path / "atlas_dgauss.csv").read_text()
    assert text.startswith("# gaussflow atlas\n# experiment:")
    assert "# resolution=3" in text
    # 17 significant digits round-trip exactly
    row = text.splitlines()[-2].split(",")
    assert float(row[1]) == cli.atlas.m_pm_gauss(1.5)[0]


def test_atlas_point_json(tmp_path):
    assert cli.main(["atlas", "--p", "1.5", "--m", "1.0", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "atlas_point.json").read_text()
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert data["point"]["admissible"] and data["m_minus"] == pytest.approx(1 / 3)


def test_flow_monotone_and_deterministic(tmp_path):
    args = ["flow", "--p", "1.5", "--m", "1.0", "--grid-n", "256", "--t-final", "2"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert (a / "flow.csv").read_bytes() == (b / "flow.csv").read_bytes()
    assert (a / "flow_summary.json").read_bytes() == (b / "flow_summary.json").read_bytes()
    header, rows = _data_rows(a / "flow.csv")
    dfc = np.array(rows)[:, header.index("deficit")]
    assert np.all(np.diff(dfc) <= 1e-12)


def test_flow_beta_flag(tmp_path):
    assert cli.main(["flow", "--p", "1.5", "--beta", "1.0", "--grid-n", "128",
                     "--t-final", "0.5", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "flow_summary.json").read_text())["m"] == 1.0


def test_bridge_and_logsob(tmp_path):
    assert cli.main(["bridge", "--p", "1.5", "--d", "1e3", "1e4", "--grid-n", "4096",
                     "--out", str(tmp_path)]) == 0
    header, rows = _data_rows(tmp_path / "bridge.csv")
    err = header.index("abs_error")
    assert rows[1][err] < rows[0][err]
    assert cli.main(["bridge", "--d", "1e4", "--grid-n", "4096", "--out", str(tmp_path / "l")]) == 0


def test_stability_sweep(tmp_path):
    assert cli.main(["stability", "--p", "1.5", "--steps", "4", "--workers", "1",
                     "--out", str(tmp_path)]) == 0
    header, rows = _data_rows(tmp_path / "stability.csv")
    assert header == ["eps", "eta", "lhs", "rhs", "slack"] and len(rows) == 16
    data = json.loads((tmp_path / "stability.json").read_text())
    assert data["holds"] and data["min_slack"] >= 0


def test_custom_potential(tmp_path):
    y = np.linspace(-12, 12, 481)
    phi = 0.5 * y ** 2 + 0.2 * np.log(np.cosh(y))  # Hess phi >= 1
    np.savetxt(tmp_path / "phi.txt", np.column_stack([y, phi]))
    assert cli.main(["flow", "--p", "1.5", "--m", "1.0", "--measure", "custom",
                     "--potential-file", str(tmp_path / "phi.txt"), "--lambda-star", "1.0",
                     "--grid-n", "256", "--t-final", "0.5", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "flow_summary.json").read_text())
    assert summary["measure"] == "custom" and summary["monotone"]


def test_underflowing_density_is_numerical_failure(tmp_path):
    # e^{-phi} underflows double precision near the edges of the window
    y = np.linspace(-12, 12, 481)
    np.savetxt(tmp_path / "phi.txt", np.column_stack([y, 0.5 * y ** 2 + 0.1 * y ** 4]))
    res = _run(["flow", "--p", "1.5", "--m", "1.0", "--measure", "custom",
                "--potential-file", str(tmp_path / "phi.txt"), "--lambda-star", "1.0",
                "--grid-n", "256", "--t-final", "0.5", "--out", str(tmp_path)], tmp_path)
    assert res.returncode == 1 and "numerical failure" in res.stderr


def test_custom_potential_rejects_nonconvex(tmp_path):
    y = np.linspace(-12, 12, 241)
    np.savetxt(tmp_path / "phi.txt", np.column_stack([y, 0.5 * y ** 2]), delimiter=",")
    code = cli.main(["flow", "--p", "1.5", "--m", "1.0", "--measure", "custom",
                     "--potential-file", str(tmp_path / "phi.txt"), "--lambda-star", "2.0",
                     "--grid-n", "128", "--out", str(tmp_path)])
    assert code == 2


@pytest.mark.parametrize("args", [
    ["flow", "--bogus"],
    ["flow", "--p", "abc"],
    ["flow", "--p", "2.5", "--m", "1"],
    ["flow", "--p", "1.5"],
    ["atlas", "--d", "-3"],
    ["stability", "--p", "1.0"],
    ["verify", "--only", "99"],
    ["nosuch"],
])
def test_invalid_flags_exit_2(args, tmp_path):
    res = _run(args + ["--out", str(tmp_path)] if args[0] != "nosuch" else args, tmp_path)
    assert res.returncode == 2, res.stderr


def test_env_out_dir(tmp_path):
    target = tmp_path / "envout"
    res = _run(["atlas", "--resolution", "3"], tmp_path, env={cli.OUT_ENV: str(target)})
    assert res.returncode == 0 and (target / "atlas_dgauss.csv").exists()


def test_verify_subset(tmp_path):
    res = _run(["verify", "--only", "1", "2", "12", "--out", str(tmp_path)], tmp_path)
    assert res.returncode == 0, res.stdout + res.stderr
    assert res.stdout.count("[PASS]") == 3
    data = json.loads((tmp_path / "verify.json").read_text())
    assert data["passed"] and [c["number"] for c in data["criteria"]] == [1, 2, 12]
