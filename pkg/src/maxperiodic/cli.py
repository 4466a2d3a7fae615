"""Pipeline orchestration: validate / periods / spinors / build / catenoid /
moduli-scan, with JSON configs, versioned reports, and strict exit codes.

Exit codes: 0 ok, 2 validation, 3 spinor/Abel obstruction, 4 quadrature
failure, 5 diagnostics-threshold failure.  Every emitted file carries the
sha256 hash of the canonicalized config.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .catenoid import build_catenoid, oracle_point_error, oracle_profile_error
from .curve import CurvePoint, RealHyperellipticCurve
from .errors import (DiagnosticsFailure, MaxperiodicError,
                     SpinorObstruction, ValidationError)
from .homology import dual_basis_and_periods, export_period_table
from .jacobian import (Divisor, JacobianLattice, solve_divisor,
                       spinor_membership, spinor_sections)
from .meshing import MeshSpec, build_curve_mesh, export_obj
from .surface import (cone_asymptotics, end_data, extract_mark,
                      integrate_immersion, pde_convergence_slope,
                      pde_residual, period_closure_table, s2_jacobian,
                      s2_probe, s2_vector, sample_grid, spacelike_check)
from .weierstrass import a0_cycle, build_weierstrass, end_cycle, flux

SCHEMA_VERSION = 1

_TOP_KEYS = {"version", "n", "branch_points", "divisor", "q0", "eps0",
             "mesh", "tolerances", "window", "pde_h", "normalize_e1_height",
             "scan", "catenoid"}
_DIVISOR_KEYS = {"mode", "section", "points"}
_MESH_KEYS = {"target_vertices", "sigma_min", "n_theta", "r_min", "r_max"}
_TOL_KEYS = {"quadrature", "lattice", "closure", "spread", "flux"}
_SCAN_KEYS = {"parameter_sets", "jacobian"}
_CAT_KEYS = {"c", "r_min", "target_vertices", "window", "pde_h"}


def config_hash(cfg) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _reject_unknown(d, allowed, where):
    unknown = set(d) - allowed
    if unknown:
        raise ValidationError(f"unknown config keys in {where}: "
                              f"{sorted(unknown)}")


def load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    _reject_unknown(cfg, _TOP_KEYS, "top level")
    if cfg.get("version") != SCHEMA_VERSION:
        raise ValidationError(f"config version must be {SCHEMA_VERSION}")
    if "divisor" in cfg:
        _reject_unknown(cfg["divisor"], _DIVISOR_KEYS, "divisor")
    if "mesh" in cfg:
        _reject_unknown(cfg["mesh"], _MESH_KEYS, "mesh")
    if "tolerances" in cfg:
        _reject_unknown(cfg["tolerances"], _TOL_KEYS, "tolerances")
        for k, v in cfg["tolerances"].items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ValidationError(f"tolerance {k} must be positive")
    if "scan" in cfg:
        _reject_unknown(cfg["scan"], _SCAN_KEYS, "scan")
    if "catenoid" in cfg:
        _reject_unknown(cfg["catenoid"], _CAT_KEYS, "catenoid")
    return cfg


def _curve_from_config(cfg):
    n = cfg.get("n")
    branch = cfg.get("branch_points")
    if n is None or branch is None:
        raise ValidationError("config requires n and branch_points")
    if not isinstance(n, int) or n < 1:
        raise ValidationError("n must be an integer >= 1")
    if len(branch) != 2 * n + 2:
        raise ValidationError("branch_points must have length 2n+2")
    return RealHyperellipticCurve(branch)


def _divisor_from_config(cfg, curve, periods, lattice, sections):
    dcfg = cfg.get("divisor", {"mode": "solve", "section": None})
    mode = dcfg.get("mode", "solve")
    if mode == "explicit":
        pts = [CurvePoint(complex(p[0], p[1]), 1) for p in dcfg["points"]]
        D = Divisor.of(*pts)
        D.validate_in_omega(curve)
        best, resid = spinor_membership(curve, periods, D, lattice,
                                        sections=sections)
        tol = cfg.get("tolerances", {}).get("lattice", 1e-7)
        if resid > tol:
            raise SpinorObstruction(
                f"explicit divisor fails the spinor condition "
                f"(residual {resid:.3e}, nearest section {best})",
                residual=resid)
        return D, best
    if mode == "solve":
        section = dcfg.get("section")
        if section is not None:
            D = solve_divisor(curve, periods, sections[section], lattice)
            return D, section
        last_err = None
        for s in sections:
            try:
                D = solve_divisor(curve, periods, s, lattice)
                return D, s.index
            except (SpinorObstruction, ValidationError) as ex:
                last_err = ex
        raise SpinorObstruction("no section admits a divisor in the domain: "
                                f"{last_err}")
    raise ValidationError(f"unknown divisor mode {mode!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(cfg, out_dir, args):
    report = {"version": SCHEMA_VERSION, "config_hash": config_hash(cfg),
              "checks": []}
    curve = _curve_from_config(cfg)
    report["checks"].append({"name": "curve_constraints", "ok": True})
    if cfg.get("divisor", {}).get("mode") == "explicit":
        pts = [CurvePoint(complex(p[0], p[1]), 1)
               for p in cfg["divisor"]["points"]]
        D = Divisor.of(*pts)
        D.validate_in_omega(curve)
        if D.degree != curve.n:
            raise ValidationError("explicit divisor must have degree n")
        report["checks"].append({"name": "divisor_in_domain", "ok": True})
    report["ok"] = True
    print(json.dumps(report, indent=2))
    return 0


def cmd_periods(cfg, out_dir, args):
    curve = _curve_from_config(cfg)
    t0 = time.time()
    pd = dual_basis_and_periods(curve)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "periods.csv", "w", newline="") as fh:
        fh.write(f"# config_hash: {config_hash(cfg)}\n")
        export_period_table(pd, fh)
    cert = {"version": SCHEMA_VERSION, "config_hash": config_hash(cfg),
            "certificates": pd.certificates,
            "Pi_imag": pd.Pi.imag.tolist(),
            "Pi_real_max": float(np.max(np.abs(pd.Pi.real))),
            "elapsed_s": time.time() - t0}
    with open(out / "periods_certificates.json", "w") as fh:
        json.dump(cert, fh, indent=2)
    print(json.dumps(cert["certificates"], indent=2))
    return 0


def cmd_spinors(cfg, out_dir, args):
    curve = _curve_from_config(cfg)
    pd = dual_basis_and_periods(curve)
    lat = JacobianLattice(pd.Pi)
    secs = spinor_sections(curve, pd, lat)
    rows = []
    for s in secs:
        row = {"index": s.index, "bits": list(s.bits),
               "point": [[v.real, v.imag] for v in s.point.rep],
               "i_fix_residual": s.i_fix_residual,
               "doubling_residual": s.doubling_residual}
        try:
            D = solve_divisor(curve, pd, s, lat)
            _, resid = spinor_membership(curve, pd, D, lat, sections=secs)
            row["admissible"] = True
            row["divisor"] = [[p.z.real, p.z.imag, m] for p, m in D.points]
            row["membership_residual"] = resid
        except (SpinorObstruction, ValidationError) as ex:
            row["admissible"] = False
            row["reason"] = str(ex)
        rows.append(row)
    report = {"version": SCHEMA_VERSION, "config_hash": config_hash(cfg),
              "count": len(secs), "sections": rows}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "spinors.json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"{len(secs)} sections; admissible: "
          f"{sum(1 for r in rows if r['admissible'])}")
    return 0


def run_build(cfg, normalize_e1_height=False):
    """Full pipeline; returns (report dict, model, mark) without touching
    the filesystem."""
    t0 = time.time()
    curve = _curve_from_config(cfg)
    tols = cfg.get("tolerances", {})
    q0 = np.asarray(cfg.get("q0", [0.0, 0.0, 0.0]), dtype=float)
    eps0 = int(cfg.get("eps0", 1))
    pd = dual_basis_and_periods(curve, tol=tols.get("quadrature", 1e-11))
    lat = JacobianLattice(pd.Pi)
    secs = spinor_sections(curve, pd, lat)
    D, section_index = _divisor_from_config(cfg, curve, pd, lat, secs)
    W = build_weierstrass(curve, pd, D, eps0=eps0, q0=q0)

    mesh_cfg = dict(cfg.get("mesh", {}))
    spec = MeshSpec(**mesh_cfg) if mesh_cfg else MeshSpec(target_vertices=9000)
    mesh = build_curve_mesh(curve, spec, obstacles=W.obstacles)
    model = integrate_immersion(W, q0, mesh,
                                closure_tol=tols.get("closure", 1e-5))
    mark = extract_mark(model)
    spread_tol = tols.get("spread", 1e-6)
    if max(mark.spreads) > spread_tol:
        raise DiagnosticsFailure(
            f"slit image spread {max(mark.spreads):.3e} exceeds "
            f"{spread_tol:g}")
    if normalize_e1_height:
        ends0 = end_data(model)
        model.X[:, 2] -= ends0.height_e1
        mark.points[:, 2] -= ends0.height_e1
        model.q0 = model.q0 - np.array([0.0, 0.0, ends0.height_e1])
    ends = end_data(model)

    cones = [tuple(p[:2]) for p in mark.points]
    q2 = mark.points[:, 1]
    window = cfg.get("window")
    if window is None:
        window = (0.0, 1.0, float(q2.min() - 0.7), float(q2.max() + 0.7))
    h = cfg.get("pde_h", 0.02)
    grid = sample_grid(model, tuple(window), h, cone_points=cones)
    resid, _ = pde_residual(grid)
    far_lo = float(q2.max() + 0.25 * (window[3] - q2.max()))
    far_window = (window[0], window[1], far_lo, window[3])
    slope, slope_table = pde_convergence_slope(model, far_window, h, 3)
    space = spacelike_check(model, tuple(window), h, cones)
    cone_table = cone_asymptotics(model, mark)

    flux_rows = []
    fa0 = flux(curve, W, a0_cycle(curve, W), "a0")
    flux_rows.append(fa0)
    for j in range(curve.n):
        from .curve import confocal_loop, slit_fatness
        s = slit_fatness(curve, j, clear_points=[o.real for o in W.obstacles])
        flux_rows.append(flux(curve, W, confocal_loop(curve, j, s),
                              f"a{j + 1}"))
    flux_rows.append(flux(curve, W, end_cycle(curve), "end0"))
    closure_rows = period_closure_table(W, pd)
    s2pts, c = s2_probe(W, model.q0)
    s2 = s2_vector(s2pts, c)

    report = {
        "version": SCHEMA_VERSION,
        "config_hash": config_hash(cfg),
        "section_index": section_index,
        "weierstrass": W.to_json_dict(),
        "closure": model.closure,
        "mark": {"points": mark.points.tolist(), "spreads": mark.spreads,
                 "basepoint_consistency": mark.basepoint_consistency,
                 "eps0": mark.eps0},
        "ends": {"normal_e1": ends.normal_e1.tolist(),
                 "height_e1": ends.height_e1,
                 "scherk_residuals_e1": ends.scherk_residuals_e1,
                 "normal_e2": ends.normal_e2.tolist(), "c": ends.c,
                 "offset_e2": ends.offset_e2,
                 "scherk_residuals_e2": ends.scherk_residuals_e2},
        "pde": {"window": list(window), "h": h, "sup_residual": resid,
                "slope": slope,
                "slope_table": [[h_, r_] for h_, r_ in slope_table],
                "slope_window": list(far_window)},
        "spacelike": space,
        "cone_slopes": cone_table,
        "flux": [{"cycle": f.cycle_id, "vector": list(f.vector),
                  "causal": f.causal} for f in flux_rows],
        "period_closure": closure_rows,
        "s2": s2.tolist(),
        "normalized_e1_height": bool(normalize_e1_height),
        "mesh": {"vertices": mesh.n_vertices, "triangles": len(mesh.tris)},
        "elapsed_s": time.time() - t0,
    }

    # hard gates (exit code 5 when a certificate fails)
    for f in flux_rows:
        if f.cycle_id.startswith("a") and f.causal != "timelike":
            raise DiagnosticsFailure(
                f"flux at singularity cycle {f.cycle_id} is {f.causal}")
    if not (-1.0 < ends.c < 1.0):
        raise DiagnosticsFailure(f"end coordinate c = {ends.c} outside (-1,1)")
    return report, model, mark


def cmd_build(cfg, out_dir, args):
    report, model, mark = run_build(
        cfg, normalize_e1_height=getattr(args, "normalize_e1_height", False))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    replicas = max(1, getattr(args, "replicas", 1))
    with open(out / "surface.obj", "w") as fh:
        export_obj(fh, model.X, model.mesh.tris, replicas=replicas,
                   header_lines=[f"config_hash: {report['config_hash']}",
                                 f"replicas: {replicas}"])
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    with open(out / "flux.csv", "w", newline="") as fh:
        fh.write(f"# config_hash: {report['config_hash']}\n")
        wr = csv.writer(fh)
        wr.writerow(["cycle", "F1", "F2", "F3", "causal"])
        for row in report["flux"]:
            wr.writerow([row["cycle"], *row["vector"], row["causal"]])
    with open(out / "cone_slopes.csv", "w", newline="") as fh:
        fh.write(f"# config_hash: {report['config_hash']}\n")
        wr = csv.writer(fh)
        wr.writerow(["cone", "ring_radius", "slope_mean", "slope_spread"])
        for qi, rows in enumerate(report["cone_slopes"]):
            for r in rows:
                wr.writerow([qi, r["r"], r["slope_mean"], r["slope_spread"]])
    print(json.dumps({"s2": report["s2"],
                      "closure": report["closure"],
                      "pde_sup_residual": report["pde"]["sup_residual"],
                      "pde_slope": report["pde"]["slope"]}, indent=2))
    return 0


def cmd_catenoid(cfg, out_dir, args):
    ccfg = dict(cfg.get("catenoid", {})) if cfg else {}
    c = ccfg.get("c", 1.0)
    t0 = time.time()
    model = build_catenoid(c=c, r_min=ccfg.get("r_min"),
                           target_vertices=ccfg.get("target_vertices", 6000))
    window = tuple(ccfg.get("window", (6.0, 8.0, 6.0, 8.0)))
    h = ccfg.get("pde_h", 0.01)
    grid = sample_grid(model, window, h)
    resid, _ = pde_residual(grid)
    rings = [0.1, 0.05, 0.01]
    from .surface import Mark as _Mark
    mark = _Mark(np.array([[0.0, 0.0, 0.0]]), 1, [0.0], 0.0)
    slopes = cone_asymptotics(model, mark, ring_radii=rings)
    # rotational symmetry: radius and height spread along each mesh ring
    rr = np.hypot(model.X[:, 0], model.X[:, 1])
    sym = 0.0
    for rg in model.mesh.end_rings["inner"] + model.mesh.end_rings["outer"]:
        sym = max(sym, float(np.ptp(rr[rg.vertices])),
                  float(np.ptp(model.X[rg.vertices, 2])))
    report = {
        "version": SCHEMA_VERSION,
        "config_hash": config_hash(cfg or {"catenoid": ccfg}),
        "c": c,
        "profile_error": oracle_profile_error(model),
        "closed_form_error": oracle_point_error(model),
        "pde": {"window": list(window), "h": h, "sup_residual": resid},
        "cone_slopes": slopes[0],
        "rotational_symmetry": sym,
        "closure": model.closure,
        "elapsed_s": time.time() - t0,
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "catenoid.obj", "w") as fh:
        export_obj(fh, model.X, model.mesh.tris,
                   header_lines=[f"config_hash: {report['config_hash']}"])
    with open(out / "catenoid.json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(json.dumps({k: report[k] for k in
                      ("profile_error", "pde", "rotational_symmetry")},
                     indent=2))
    if resid > 1e-6:
        raise DiagnosticsFailure(
            f"catenoid PDE residual {resid:.3e} exceeds 1e-6")
    return 0


def cmd_moduli_scan(cfg, out_dir, args):
    scan = cfg.get("scan")
    if not scan or "parameter_sets" not in scan:
        raise ValidationError("moduli-scan needs scan.parameter_sets")
    q0 = tuple(cfg.get("q0", (0.0, 0.0, 0.0)))
    eps0 = int(cfg.get("eps0", 1))
    section = cfg.get("divisor", {}).get("section", 1)
    want_jac = bool(scan.get("jacobian", True))
    rows = []
    s2s = []
    for pset in scan["parameter_sets"]:
        row = {"branch_points": list(pset)}
        try:
            from .surface import s2_of_params
            v, _ = s2_of_params(pset, q0, eps0, section)
            row["s2"] = [float(x) for x in v]
            s2s.append(np.asarray(v))
            if want_jac:
                _, sv, _ = s2_jacobian(pset, q0, eps0, section)
                row["singular_values"] = [float(s) for s in sv]
                row["rank_rel_1e6"] = int(np.sum(sv > 1e-6 * sv[0]))
            row["ok"] = True
        except MaxperiodicError as ex:
            row["ok"] = False
            row["error"] = f"{type(ex).__name__}: {ex}"
        rows.append(row)
    sep = None
    if len(s2s) >= 2:
        dmin = np.inf
        for i in range(len(s2s)):
            for j in range(i + 1, len(s2s)):
                d = s2s[i] - s2s[j]
                d[0::3][: (len(d) - 1) // 3] -= np.rint(
                    d[0::3][: (len(d) - 1) // 3])
                dmin = min(dmin, float(np.linalg.norm(d)))
        sep = dmin
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "moduli_scan.csv", "w", newline="") as fh:
        fh.write(f"# config_hash: {config_hash(cfg)}\n")
        wr = csv.writer(fh)
        wr.writerow(["index", "ok", "branch_points", "s2",
                     "singular_values", "rank_rel_1e6", "error"])
        for i, row in enumerate(rows):
            wr.writerow([i, row["ok"], json.dumps(row["branch_points"]),
                         json.dumps(row.get("s2")),
                         json.dumps(row.get("singular_values")),
                         row.get("rank_rel_1e6"), row.get("error", "")])
    summary = {"config_hash": config_hash(cfg),
               "n_sets": len(rows),
               "n_ok": sum(1 for r in rows if r["ok"]),
               "min_pairwise_s2_separation": sep}
    with open(out / "moduli_scan_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary, indent=2))
    return 0


# ---------------------------------------------------------------------------

def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="maxperiodic",
        description="Singly periodic maximal surfaces from hyperelliptic "
                    "moduli data")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "periods", "spinors", "build", "catenoid",
                 "moduli-scan"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name not in ("catenoid",)),
                       help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        if name == "build":
            p.add_argument("--replicas", type=int, default=1,
                           help="fundamental domains in the OBJ export")
            p.add_argument("--normalize-e1-height", action="store_true",
                           dest="normalize_e1_height",
                           help="translate so the E1 asymptotic height is 0")
    args = parser.parse_args(argv)
    handlers = {"validate": cmd_validate, "periods": cmd_periods,
                "spinors": cmd_spinors, "build": cmd_build,
                "catenoid": cmd_catenoid, "moduli-scan": cmd_moduli_scan}
    try:
        cfg = load_config(args.config) if args.config else None
        return handlers[args.command](cfg, args.out, args)
    except MaxperiodicError as ex:
        print(f"error ({type(ex).__name__}): {ex}", file=sys.stderr)
        return ex.exit_code


if __name__ == "__main__":
    sys.exit(main())
