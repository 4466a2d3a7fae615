import csv
import json

import numpy as np
import pytest

from maxperiodic.cli import main

BASE_CFG = {
    "version": 1,
    "n": 1,
    "branch_points": [-2.0, -1.0, 0.5, 2.0],
    "divisor": {"mode": "solve", "section": 1},
    "q0": [0.0, 0.0, 0.0],
    "eps0": 1,
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_validate_ok(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE_CFG)
    assert main(["validate", "--config", cfg]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["ok"]


def test_validate_unsorted_branch(tmp_path):
    bad = dict(BASE_CFG, branch_points=[-1.0, -2.0, 0.5, 2.0])
    assert main(["validate", "--config", write_cfg(tmp_path, bad)]) == 2


def test_validate_basepoint_outside_slit(tmp_path):
    bad = dict(BASE_CFG, branch_points=[-2.0, -1.0, 1.5, 2.0])
    assert main(["validate", "--config", write_cfg(tmp_path, bad)]) == 2


def test_unknown_key_rejected(tmp_path):
    bad = dict(BASE_CFG, typo_key=1)
    assert main(["validate", "--config", write_cfg(tmp_path, bad)]) == 2


def test_periods_csv(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG)
    out = tmp_path / "out"
    assert main(["periods", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "periods.csv") as fh:
        comment = fh.readline()
        assert comment.startswith("# config_hash:")
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    # purely imaginary period column
    assert float(rows[0]["b1_re"]) == pytest.approx(0.0, abs=1e-10)
    assert abs(float(rows[0]["b1_im"])) > 0.1
    cert = json.loads((out / "periods_certificates.json").read_text())
    assert cert["certificates"]["delta_residual"] < 1e-10


def test_spinors_json_reproducible(tmp_path):
    cfg = write_cfg(tmp_path, BASE_CFG)
    outs = []
    for d in ("o1", "o2"):
        out = tmp_path / d
        assert main(["spinors", "--config", cfg, "--out", str(out)]) == 0
        outs.append(json.loads((out / "spinors.json").read_text()))
    assert outs[0]["count"] == 4
    for s in outs[0]["sections"]:
        assert s["i_fix_residual"] < 1e-7
    # reproducible ordering and values across runs
    for a, b in zip(outs[0]["sections"], outs[1]["sections"]):
        assert a["bits"] == b["bits"]
        assert a["point"] == b["point"]
        assert a["admissible"] == b["admissible"]
    adm = [s for s in outs[0]["sections"] if s["admissible"]]
    assert len(adm) >= 1
    for s in adm:
        assert s["membership_residual"] < 1e-7


@pytest.fixture(scope="module")
def build_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("build")
    cfg = dict(BASE_CFG, mesh={"target_vertices": 6000}, pde_h=0.025)
    cfgp = tmp / "cfg.json"
    cfgp.write_text(json.dumps(cfg))
    out = tmp / "out"
    rc = main(["build", "--config", str(cfgp), "--out", str(out),
               "--replicas", "2"])
    return rc, out, cfg


def test_build_artifacts(build_out):
    rc, out, cfg = build_out
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    # s2 tuple of length 3n+4
    assert len(report["s2"]) == 7
    assert report["closure"]["period_closure_max"] < 1e-6
    assert report["config_hash"]
    # flux table rows carry causal classes
    a_rows = [r for r in report["flux"] if r["cycle"].startswith("a")]
    assert a_rows and all(r["causal"] == "timelike" for r in a_rows)
    obj = (out / "surface.obj").read_text().splitlines()
    nv = sum(1 for line in obj if line.startswith("v "))
    nf = sum(1 for line in obj if line.startswith("f "))
    assert nv == 2 * report["mesh"]["vertices"]     # two replicas
    assert nf == 2 * report["mesh"]["triangles"]
    with open(out / "flux.csv") as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    assert any(r["cycle"] == "end0" for r in rows)


def test_build_replica_shift(build_out):
    rc, out, _ = build_out
    obj = (out / "surface.obj").read_text().splitlines()
    vs = np.array([[float(x) for x in line.split()[1:]]
                   for line in obj if line.startswith("v ")])
    V = len(vs) // 2
    shift = vs[V:] - vs[:V]
    assert np.allclose(shift, [1.0, 0.0, 0.0])


def test_build_diagnostics_gate(tmp_path):
    cfg = dict(BASE_CFG, mesh={"target_vertices": 4000},
               tolerances={"spread": 1e-30})
    rc = main(["build", "--config", write_cfg(tmp_path, cfg),
               "--out", str(tmp_path / "o")])
    assert rc == 5


def test_build_quadrature_gate(tmp_path):
    cfg = dict(BASE_CFG, mesh={"target_vertices": 4000},
               tolerances={"closure": 1e-30})
    rc = main(["build", "--config", write_cfg(tmp_path, cfg),
               "--out", str(tmp_path / "o")])
    assert rc == 4


def test_normalize_e1_height_flag(tmp_path):
    cfg = dict(BASE_CFG, mesh={"target_vertices": 5000}, pde_h=0.04)
    out = tmp_path / "o"
    rc = main(["build", "--config", write_cfg(tmp_path, cfg),
               "--out", str(out), "--normalize-e1-height"])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["normalized_e1_height"] is True
    assert abs(report["ends"]["height_e1"]) < 1e-6


def test_non_spinor_divisor_exit3(tmp_path):
    cfg = dict(BASE_CFG,
               divisor={"mode": "explicit", "points": [[0.9, 1.3]]})
    rc = main(["build", "--config", write_cfg(tmp_path, cfg),
               "--out", str(tmp_path / "o")])
    assert rc == 3


def test_catenoid_command(tmp_path):
    cfg = {"version": 1, "catenoid": {"c": 1.0, "target_vertices": 5000}}
    out = tmp_path / "out"
    rc = main(["catenoid", "--config", write_cfg(tmp_path, cfg),
               "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "catenoid.json").read_text())
    assert report["pde"]["sup_residual"] < 1e-6
    assert report["profile_error"] < 1e-8
    assert report["rotational_symmetry"] < 1e-8
    assert report["cone_slopes"][-1]["slope_mean"] == pytest.approx(
        1.0, abs=1e-3)
    assert (out / "catenoid.obj").exists()


def test_moduli_scan(tmp_path):
    cfg = dict(BASE_CFG)
    cfg["scan"] = {"parameter_sets": [
        [-2.0, -1.0, 0.5, 2.0],
        [-2.3, -1.1, 0.45, 2.2],
        [-2.0, -1.0, 1.5, 2.0],       # invalid: basepoint outside the slit
    ], "jacobian": False}
    out = tmp_path / "out"
    rc = main(["moduli-scan", "--config", write_cfg(tmp_path, cfg),
               "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "moduli_scan_summary.json").read_text())
    assert summary["n_sets"] == 3
    assert summary["n_ok"] == 2                      # degenerate flagged
    assert summary["min_pairwise_s2_separation"] > 1e-3
    with open(out / "moduli_scan.csv") as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    assert rows[2]["ok"] == "False" and "ValidationError" in rows[2]["error"]
