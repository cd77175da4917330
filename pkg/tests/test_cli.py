import json
import subprocess
import sys

import pytest

from cxkenergy import __version__
from cxkenergy.cli import main
from cxkenergy.errors import ConfigError
from cxkenergy.report import Check, Report
from cxkenergy.suites import RunConfig, run_suite


def test_verify_identities(capsys):
    assert main(["verify", "--suite", "identities", "--backend", "torus-n1", "--m", "64"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "PASS phase_radius" in out


def test_unknown_suite_and_bad_config(tmp_path, capsys):
    assert main(["verify", "--suite", "nope"]) == 2
    assert "--suite" in capsys.readouterr().err
    assert main(["verify", "--suite", "identities", "--backend", "torus-n1", "--m", "12"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"backend": "torus-n1", "colour": 3}')
    assert main(["verify", "--suite", "identities", "--config", str(bad)]) == 2
    assert "colour" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["verify", "--suite", "identities", "--backend", "sphere"])
    assert info.value.code == 2


def test_wrong_backend_for_command():
    assert main(["futaki", "--backend", "torus-n1"]) == 2
    assert main(["surface", "--backend", "cp1"]) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"backend": "cp1", "m": 96, "seed": 3}))
    out = tmp_path / "r.json"
    assert main(["futaki", "--config", str(cfg), "--seed", "4", "--out", str(out), "--format", "json"]) == 0
    data = json.loads(out.read_text())
    assert data["config"]["seed"] == 4
    assert data["config"]["m"] == 96
    assert data["version"] == __version__


def test_seeded_runs_are_byte_identical(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["verify", "--suite", "variations", "--backend", "cp1", "--seed", "7", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_text().splitlines()[0] == "check,value,tolerance,pass"


def test_failing_check_gives_exit_code_one(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["kenergy", "--backend", "cp1", "--tol", "1e-30", "--out", str(out)]) == 1
    assert "false" in out.read_text()


def test_report_formats():
    empty = Report()
    assert empty.to_csv() == "check,value,tolerance,pass\n"
    assert empty.exit_code == 0
    rep = Report([Check.at_most("a", 0.5, 1.0), Check.at_least("b", -1.0, 0.0), Check.within("c", 4.0, 3.5, 4.5)],
                 config={"seed": 1})
    assert [c.passed for c in rep.checks] == [True, False, True]
    assert rep.exit_code == 1
    back = Report.from_json(rep.to_json())
    assert back == rep
    assert rep.to_csv().splitlines()[2].endswith(",false")


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(backend="torus-n2", m=64)
    with pytest.raises(ConfigError):
        RunConfig(alpha=[[1.0, 2.0], [0.0, 1.0]], backend="torus-n2")
    with pytest.raises(ConfigError):
        run_suite(RunConfig(), "surface")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cxkenergy.cli", "stability", "--backend", "torus-n2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "top_inequality_p2" in proc.stdout


def test_bad_theta_lift_exits_2(capsys):
    assert main(["stability", "--backend", "torus-n2", "--theta-hat", "2.2"]) == 2
    assert "not a lift" in capsys.readouterr().err
