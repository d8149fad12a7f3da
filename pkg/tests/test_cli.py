import io
import json

import pytest

from calibrated_holonomy.cli import RunConfig, main
from calibrated_holonomy.errors import ConfigError

SMALL = {"grid": {"n_theta": 12, "n_phi": 24, "n_x": 6, "n_y": 6}, "potentials": {"count": 2}}


def run(tmp_path, command, config=None, *extra):
    args = [command, "--output", str(tmp_path / "out")]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    out = io.StringIO()
    code = main(args + list(extra), out=out)
    return code, out.getvalue()


def csv_body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    return "\n".join(lines[1:])


def test_defaults():
    cfg = RunConfig()
    assert cfg.grid.shape == (24, 48, 8, 8)
    assert (cfg.klass.a, cfg.klass.b) == (1.0, 0.0)
    assert cfg.convention == "standard" and cfg.count == 20
    assert RunConfig.from_dict(cfg.as_dict()) == cfg


@pytest.mark.parametrize(
    "config,match",
    [
        ({"grid": {"n_phi": 5}}, "n_phi"),
        ({"colour": 1}, "colour"),
        ({"potentials": {"seeds": 1}}, "seeds"),
        ({"potentials": {"count": 0}}, "count"),
        ({"tolerances": {"lemma": "tight"}}, "lemma"),
        ({"convention": "other"}, "convention"),
    ],
)
def test_config_errors_name_the_field(config, match):
    with pytest.raises(ConfigError, match=match):
        RunConfig.from_dict(config)


def test_verify_calculus_exit_codes(tmp_path, capsys):
    code, out = run(tmp_path, "verify-calculus", SMALL)
    assert code == 0 and "FAIL" not in out
    report = json.loads((tmp_path / "out" / "calculus_report.json").read_text())
    assert report["passed"] and report["config"]["grid"]["n_theta"] == 12
    code, out = run(tmp_path, "verify-calculus", {**SMALL, "tolerances": {"calculus": 1e-16}})
    assert code == 1 and "FAIL" in out
    code, _ = run(tmp_path, "verify-calculus", {"grid": {"n_phi": 5}})
    assert code == 2
    assert "n_phi" in capsys.readouterr().err


def test_trivial_class_rejected(tmp_path, capsys):
    for command in ("scan", "lemma", "noncancel"):
        code, _ = run(tmp_path, command, {**SMALL, "class": {"a": 0, "b": 0}})
        assert code == 2
    assert "class must be non-trivial" in capsys.readouterr().err
    code, _ = run(tmp_path, "holonomy", {**SMALL, "class": {"a": 0, "b": 0}})
    assert code == 2


def test_holonomy_baseline(tmp_path):
    code, out = run(tmp_path, "holonomy", {**SMALL, "class": {"a": 0, "b": 0}, "potentials": {"amplitude": 0.0}})
    assert code == 0
    report = json.loads((tmp_path / "out" / "holonomy_report.json").read_text())
    assert report["verdict"] == "reducible-splitting-preserved"
    assert (tmp_path / "out" / "loops.csv").exists()


def test_noncancel_writes_rows(tmp_path):
    code, out = run(tmp_path, "noncancel", SMALL)
    assert code == 0
    body = csv_body(tmp_path / "out" / "noncancellation.csv").splitlines()
    assert body[0] == "sample_id,seed,norm_Rh,norm_Rnh,cross,norm_Rfull,flag"
    assert len(body) == 3
    assert body[1].split(",")[1] == "7" and body[2].split(",")[1] == "8"


def test_paper_literal_reports_dual_path(tmp_path):
    code, out = run(tmp_path, "curvature-report", SMALL, "--convention", "paper-literal")
    assert "REPORT curvature-report: dual-path gap" in out
    assert code == 0


def test_seed_override_and_workers(tmp_path):
    code, _ = run(tmp_path, "noncancel", SMALL, "--seed-override", "100", "--workers", "2")
    assert code == 0
    body = csv_body(tmp_path / "out" / "noncancellation.csv").splitlines()
    assert body[1].split(",")[1] == "100"
    assert run(tmp_path, "noncancel", SMALL, "--seed-override", str(2**64))[0] == 2
    assert run(tmp_path, "noncancel", SMALL, "--workers", "0")[0] == 2


def test_echoed_config_reproduces_csv(tmp_path):
    run(tmp_path, "ricci", SMALL)
    first = tmp_path / "out" / "ricci.csv"
    echoed = json.loads(first.read_text().splitlines()[0][len("# config: "):])
    echoed["output_dir"] = str(tmp_path / "again")
    path = tmp_path / "echo.json"
    path.write_text(json.dumps(echoed))
    assert main(["ricci", "--config", str(path)], out=io.StringIO()) == 0
    assert csv_body(first) == csv_body(tmp_path / "again" / "ricci.csv")


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["verify-calculus", "--output", str(blocker / "sub")], out=io.StringIO()) == 2


def test_unknown_subcommand():
    assert main(["frobnicate"], out=io.StringIO()) == 2
