import json

import pytest

from backreaction import cli
from backreaction import dynamics as dyn

SMALL = {
    "coupling": {"m": 1.0, "xi": "conformal", "lambda": "static", "eight_pi_G": 1},
    "grid": {"k_min": 0.01, "k_max": 1000, "points": 256},
    "init": {"profile": "vacuum", "a": {"name": "bump", "amplitude": 0.01}},
    "t_end": 0.2, "cadence": 0.1,
}


def _write(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_verify_series_passes(capsys):
    assert cli.main(["verify", "--scope", "series"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.strip().endswith("OK")


def test_verify_all_reports_v1_ruling(capsys):
    assert cli.main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "INFO [hadamard] v1 m^4 sign ruling" in out
    assert out.count("FLAG") >= 4


def test_verify_mutation_names_slot(capsys):
    assert cli.main(["verify", "--scope", "hadamard", "--perturb", "u:2,0"]) == 1
    out = capsys.readouterr().out
    assert "FAIL [hadamard] u recursion" in out and "slot (z0^2 Z^0)" in out


def test_verify_bad_perturbation(capsys):
    assert cli.main(["verify", "--scope", "hadamard", "--perturb", "nonsense"]) == 1


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", _write(tmp_path, SMALL), "--out", str(out)]) == 0
    geo = (out / "geometry.csv").read_text().splitlines()
    assert geo[0] == "t,a,H,Hdot,Hddot,Hdddot,R,residual"
    assert len(geo) == 4
    diag = (out / "diagnostics.csv").read_text().splitlines()
    assert diag[0].startswith("t,phi2_ren,max_purity_defect")
    snap = (out / "modes_0.100000.csv").read_text().splitlines()
    assert snap[0] == "k,Gpp,Gppi,Gpipi,Jk" and len(snap) == 257
    for row in snap[1:]:
        k, gpp, gppi, gpipi, jk = map(float, row.split(","))
        assert gpp > 0 and jk >= 0.25 - 1e-12
    # every field is the %.17g rendering of its value
    for field in geo[-1].split(","):
        assert field == "%.17g" % float(field)
    assert float(geo[-1].split(",")[0]) == 0.2


@pytest.mark.parametrize("patch", [
    {"t_end": -1},
    {"cadence": 0},
    {"init": {"a": {"name": "nope"}}},
    {"init": {"profile": "thermal"}},
    {"equation": "implicit"},
    {"init": {"a": {"name": "bump", "amplitude": -100.0}}},
])
def test_config_errors_exit_2(tmp_path, patch, capsys):
    cfg = dict(SMALL)
    cfg.update(patch)
    assert cli.main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_unreadable_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", str(bad)]) == 2


def test_solver_abort_exit_3(tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise dyn.SolverAbort("step size underflow", {"t": 0.1})

    monkeypatch.setattr(dyn, "evolve", boom)
    assert cli.main(["run", _write(tmp_path, SMALL), "--out", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err
    assert "solver abort" in err and '"t": 0.1' in err
