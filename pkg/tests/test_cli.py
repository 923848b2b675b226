import json
import math
import os

import pytest

from nbesov.cli import main
from nbesov.domains import build_interval_basis, save_basis


@pytest.fixture(scope="module")
def basis_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_basis") / "interval.json"
    save_basis(build_interval_basis(math.pi, 64, N=512), str(path))
    return str(path)


@pytest.fixture(scope="module")
def unit_basis_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_basis_unit") / "unit.json"
    save_basis(build_interval_basis(1.0, 8, N=64), str(path))
    return str(path)


def _write_function(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _norm_value(out):
    lines = out.strip().splitlines()
    assert lines[0] == "norm,params,value,tail_bound"
    cells = lines[1].split(",")
    return cells, float(cells[2])


# ---------------------------------------------------------------------------
# basis


def test_basis_prints_interval_eigenvalues(capsys):
    assert main(["basis", "--K", "16", "--N", "128"]) == 0
    out = capsys.readouterr().out
    assert "lambda_1 = 0.0" in out
    assert "lambda_2 = 1.0" in out
    assert "lambda_10 = 81.0" in out


def test_basis_save_is_reproducible(tmp_path, capsys):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["basis", "--K", "16", "--N", "128", "--out", str(p1)]) == 0
    assert main(["basis", "--K", "16", "--N", "128", "--out", str(p2)]) == 0
    capsys.readouterr()
    assert p1.read_bytes() == p2.read_bytes()


def test_basis_lshape(capsys):
    assert main(["basis", "--shape", "lshape", "--h", "0.2", "--K", "12"]) == 0
    out = capsys.readouterr().out
    values = [float(line.split(" = ")[1]) for line in out.strip().splitlines()]
    assert abs(values[0]) < 1e-8
    assert values[1] > 0.1
    assert values == sorted(values)


def test_basis_rejects_overcrowded_band(capsys):
    assert main(["basis", "--K", "200", "--N", "128"]) == 1
    assert "basis:" in capsys.readouterr().err


def test_bad_flag_exits_one():
    with pytest.raises(SystemExit) as exc:
        main(["basis", "--shape", "triangle"])
    assert exc.value.code == 1


def test_missing_required_flag_exits_one():
    with pytest.raises(SystemExit) as exc:
        main(["norm", "--norm", "lp"])
    assert exc.value.code == 1


# ---------------------------------------------------------------------------
# norm


def test_norm_besov_of_single_mode(basis_file, tmp_path, capsys):
    fn = _write_function(tmp_path, "f.json", {"coeffs": [0.0, 1.0]})
    assert main(["norm", "--basis", basis_file, "--function", fn]) == 0
    cells, value = _norm_value(capsys.readouterr().out)
    assert cells[0] == "besov_inhom"
    assert value == pytest.approx(1.0, abs=1e-12)


def test_norm_accepts_inf_exponent(basis_file, tmp_path, capsys):
    fn = _write_function(tmp_path, "f.json", {"coeffs": [0.0, 1.0]})
    assert main(
        ["norm", "--basis", basis_file, "--function", fn, "--q", "inf"]
    ) == 0
    _, value = _norm_value(capsys.readouterr().out)
    assert value == pytest.approx(1.0, abs=1e-12)


def test_norm_hom_reports_tail(basis_file, tmp_path, capsys):
    fn = _write_function(tmp_path, "f.json", {"coeffs": [0.0, 1.0]})
    assert main(
        ["norm", "--basis", basis_file, "--function", fn, "--hom"]
    ) == 0
    cells, value = _norm_value(capsys.readouterr().out)
    assert cells[0] == "besov_hom"
    assert value == pytest.approx(1.0, abs=1e-12)
    assert float(cells[3]) == 0.0


def test_norm_jmax_too_small_exits_one(basis_file, tmp_path, capsys):
    fn = _write_function(tmp_path, "f.json", {"coeffs": [0.0] * 59 + [1.0]})
    assert main(
        ["norm", "--basis", basis_file, "--function", fn, "--jmax", "5"]
    ) == 1
    assert "norm:" in capsys.readouterr().err


def test_norm_amalgam_golden(unit_basis_file, tmp_path, capsys):
    fn = _write_function(tmp_path, "one.json", {"values": [1.0] * 64})
    assert main(
        ["norm", "--basis", unit_basis_file, "--function", fn,
         "--norm", "amalgam", "--p", "1", "--theta", "0.0625"]
    ) == 0
    cells, value = _norm_value(capsys.readouterr().out)
    assert cells[0] == "amalgam"
    assert value == pytest.approx(1.5 + 0.5 * math.sqrt(2.0), rel=1e-14)


def test_norm_lp(unit_basis_file, tmp_path, capsys):
    fn = _write_function(tmp_path, "one.json", {"values": [1.0] * 64})
    assert main(
        ["norm", "--basis", unit_basis_file, "--function", fn,
         "--norm", "lp", "--p", "inf"]
    ) == 0
    _, value = _norm_value(capsys.readouterr().out)
    assert value == 1.0


def test_norm_rejects_malformed_function(basis_file, tmp_path, capsys):
    fn = _write_function(tmp_path, "nope.json", {"foo": [1.0]})
    assert main(["norm", "--basis", basis_file, "--function", fn]) == 1
    assert "neither" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# multiplier / heat


def test_multiplier_block_requires_j(basis_file, capsys):
    assert main(["multiplier", "--basis", basis_file]) == 1
    assert "--j is required" in capsys.readouterr().err


def test_multiplier_block_endpoints(basis_file, tmp_path, capsys):
    out_file = tmp_path / "k.npz"
    assert main(
        ["multiplier", "--basis", basis_file, "--symbol", "block",
         "--j", "3", "--out", str(out_file)]
    ) == 0
    out = capsys.readouterr().out
    assert "tail_bound = 0.0" in out
    vals = dict(
        line.split(" = ") for line in out.strip().splitlines() if " = " in line
    )
    assert float(vals["norm[2->2]"]) <= 1.0 + 1e-10
    assert out_file.exists()


def test_heat_prints_mean_removed_sup(basis_file, capsys):
    assert main(["heat", "--basis", basis_file, "--t", "2.0"]) == 0
    out = capsys.readouterr().out
    vals = dict(
        line.split(" = ") for line in out.strip().splitlines() if " = " in line
    )
    assert float(vals["norm[2->2]"]) == pytest.approx(1.0, rel=1e-12)
    # Deviation from the mean projector peaks at the corner, where every
    # surviving mode contributes (2/pi) e^{-2 k^2}; the grid's half-cell
    # offset from the corner costs a few parts in 1e5.
    expect = (2.0 / math.pi) * sum(math.exp(-2.0 * k * k) for k in range(1, 4))
    assert float(vals["mean_removed_sup"]) == pytest.approx(expect, rel=1e-4)


# ---------------------------------------------------------------------------
# verify / report


def test_verify_single_experiment(tmp_path, capsys):
    out = tmp_path / "reports"
    assert main(["verify", "--only", "exp_reconstruction", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "reconstruction" in text and "pass" in text
    assert (out / "reconstruction.json").exists()


def test_verify_unknown_experiment(tmp_path, capsys):
    assert main(["verify", "--only", "nope", "--out", str(tmp_path / "r")]) == 1
    assert "unknown experiment" in capsys.readouterr().err


def test_verify_config_parse_error_cites_location(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{\n  "seed": 1,\n  "jobs": 2,\n  BAD\n}\n')
    assert main(["verify", "--config", str(cfg)]) == 1
    assert "line 4" in capsys.readouterr().err


def test_verify_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"sedd": 7}\n')
    assert main(["verify", "--config", str(cfg)]) == 1
    assert "invalid config" in capsys.readouterr().err


def test_verify_flag_overrides_config_and_seed_strides(tmp_path, capsys):
    cfg_out = tmp_path / "from_config"
    flag_out = tmp_path / "from_flag"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 7, "only": ["duality"], "out": str(cfg_out)}))
    assert main(["verify", "--config", str(cfg), "--out", str(flag_out)]) == 0
    capsys.readouterr()
    assert not cfg_out.exists()
    payload = json.loads((flag_out / "duality.json").read_text())
    # Base seed 7 plus the registry stride for the seventh slot.
    assert payload["seed"] == 7 + 101 * 6


def test_verify_inconclusive_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "only": ["multiplier_scaling"],
        "experiments": {"multiplier_scaling": {"j_lo": 3, "j_hi": 4}},
    }))
    rc = main(["verify", "--config", str(cfg), "--out", str(tmp_path / "r")])
    assert rc == 2
    assert "inconclusive" in capsys.readouterr().out


def test_verify_negative_control_exit_code(tmp_path, capsys):
    rc = main(
        ["verify", "--only", "neg_reversed_inequality", "--out", str(tmp_path / "r")]
    )
    assert rc == 3
    assert "fail" in capsys.readouterr().out


def test_verify_out_dir_from_environment(tmp_path, capsys, monkeypatch):
    env_out = tmp_path / "env_reports"
    monkeypatch.setenv("NB_OUT", str(env_out))
    monkeypatch.chdir(tmp_path)
    assert main(["verify", "--only", "duality"]) == 0
    capsys.readouterr()
    assert (env_out / "duality.json").exists()


def test_report_rerenders_saved_directory(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["verify", "--only", "duality", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["report", "--dir", str(out)]) == 0
    text = capsys.readouterr().out
    assert "duality" in text and "pass" in text


def test_report_exit_code_tracks_verdicts(tmp_path, capsys):
    (tmp_path / "x.json").write_text(json.dumps({"id": "x", "verdict": "fail"}))
    (tmp_path / "y.json").write_text(json.dumps({"id": "y", "verdict": "pass"}))
    assert main(["report", "--dir", str(tmp_path)]) == 3
    capsys.readouterr()


def test_report_empty_directory(tmp_path, capsys):
    os.makedirs(tmp_path / "empty", exist_ok=True)
    assert main(["report", "--dir", str(tmp_path / "empty")]) == 1
    assert "no report files" in capsys.readouterr().err
