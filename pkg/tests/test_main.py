import json

import main


def _config(path, **data):
    path.write_text(json.dumps({"schema_version": 1, **data}), encoding="utf-8")
    return str(path)


def test_validate_exit_codes(tmp_path):
    good = _config(tmp_path / "good.json", kind="signed", N=64)
    bad = _config(tmp_path / "bad.json", kind="signed")
    assert main.main(["validate", good]) == 0
    assert main.main(["validate", good, bad]) == 2


def test_run_exit_codes(tmp_path):
    ok = _config(tmp_path / "identity.json", kind="theorem1", name="identity", gamma=0.0, N=16)
    assert main.main(["--out-dir", str(tmp_path / "out"), "run", ok]) == 0
    assert (tmp_path / "out" / "identity" / "manifest.json").exists()
    failing = _config(tmp_path / "fail.json", kind="theorem1", name="fail", gamma=0.0, N=16,
                      symbol={"type": "trig", "coefficients": [1, 2, 1]})
    assert main.main(["--out-dir", str(tmp_path / "out"), "run", failing]) == 1


def test_invalid_run_config(tmp_path):
    bad = _config(tmp_path / "bad.json", kind="theorem1", N=4)
    assert main.main(["--out-dir", str(tmp_path), "run", bad]) == 2


def test_report_command(tmp_path, capsys):
    ok = _config(tmp_path / "identity.json", kind="theorem1", name="identity", gamma=0.0, N=16)
    main.main(["--out-dir", str(tmp_path / "out"), "run", ok])
    assert main.main(["report", str(tmp_path / "out" / "identity")]) == 0
    assert "identity_fixture" in capsys.readouterr().out
