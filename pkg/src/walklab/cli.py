"""Command-line entry point binding configuration files to experiments.

Subcommands map one-to-one to the library operations:

    validate                 kernel + domain condition checks
    solve                    one Dirichlet solve on a region, field to CSV
    mc                       Monte Carlo exit estimate, JSON
    construct                exhaustion candidate, field CSV + convergence JSON
    martin                   Martin-kernel profile on a matched truncation
    lab {harnack,carleson,prop1,bhp,lemma2,decay,growth}
                             measured-constant reports over a scale grid
    uniq                     cross-data uniqueness comparison

Exit status 0 means every asserted invariant of the experiment held; failures
produce a machine-readable JSON summary on stdout and status 1; configuration
problems exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import constructor as cons
from . import lab as labmod
from .config import (
    ExperimentConfig,
    build_domain,
    build_kernel,
    load_config,
    parse_point,
    parse_region,
)
from .errors import ConfigError, OnsetNotFoundError, WalkLabError
from .geometry import ball, cube, enumerate_region
from .kernels import validate_kernel
from .montecarlo import SimulationConfig, estimate_exit_probability
from .reports import LabReport, TOOL_VERSION, write_field_csv, write_json_report
from .solver import Field, LatticeSystem
from ._mc_step import NUMBA_ENABLED


def _fail(payload: dict, code: int = 1) -> int:
    print(json.dumps({"status": "fail", **payload}, sort_keys=True))
    return code


def _ok(payload: dict) -> int:
    print(json.dumps({"status": "ok", **payload}, sort_keys=True))
    return 0


def _meta(cfg: ExperimentConfig) -> dict:
    return {"config_digest": cfg.digest, "tool_version": TOOL_VERSION}


def _validate_first(cfg: ExperimentConfig):
    kernel = build_kernel(cfg)
    domain = build_domain(cfg)
    window = enumerate_region(cube((0,) * cfg.dimension, 6), None)
    validate_kernel(kernel, window)
    return kernel, domain


def cmd_validate(cfg, args) -> int:
    kernel, domain = _validate_first(cfg)
    prof = domain.profile
    return _ok({
        "kernel_kind": kernel.kind,
        "alpha": kernel.alpha,
        "steps": len(kernel.step_set),
        "profile_kind": prof.kind,
        "lipschitz_constant": prof.lipschitz_constant,
        **_meta(cfg),
    })


def cmd_solve(cfg, args) -> int:
    kernel, domain = _validate_first(cfg)
    region = parse_region(args.region or cfg.get("region", "ball:y=0,R=16"),
                          cfg.dimension)
    interior = enumerate_region(region, domain, kernel.steps_array())
    sys_ = LatticeSystem(interior, kernel)
    bpts = sys_.boundary_points
    data_name = args.data or cfg.get("data", "top-indicator")
    g = _boundary_data(data_name, bpts, domain)
    tol = args.tol or cfg.get("tol", 1e-10)
    u = sys_.solve_boundary_data(g, tol=tol)
    pts = np.vstack([sys_.points, bpts])
    vals = np.concatenate([u, g])
    order = np.lexsort(pts.T[::-1])
    out = args.out or "field.csv"
    write_field_csv(Field(pts[order], vals[order]), out, _meta(cfg))
    return _ok({"out": out, "interior_points": int(len(interior)), **_meta(cfg)})


def _boundary_data(name: str, bpts, domain) -> np.ndarray:
    in_c = domain.contains_array(bpts)
    if name == "top-indicator":
        return in_c.astype(np.float64)
    if name == "one":
        return np.ones(len(bpts))
    if name == "zero":
        return np.zeros(len(bpts))
    if name == "x1":
        return bpts[:, 0].astype(np.float64)
    raise ConfigError(f"unknown boundary data {name!r}")


def cmd_mc(cfg, args) -> int:
    kernel, domain = _validate_first(cfg)
    region = parse_region(args.region or cfg.get("region", "ball:y=0,R=16"),
                          cfg.dimension)
    interior = enumerate_region(region, domain, kernel.steps_array())
    start = parse_point(args.start, cfg.dimension) if args.start else tuple(
        cfg.get("start", (0,) * cfg.dimension))
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    sim = SimulationConfig(
        kernel=kernel, start=start, stop_region=interior,
        n_paths=args.paths or cfg.get("paths", 10000),
        seed=int(seed), path_cap=cfg.get("path_cap"),
    )
    from .geometry import boundary as bdry

    bpts = bdry(interior, kernel.steps_array())
    target_name = args.target or cfg.get("target", "top-indicator")
    tmask = _boundary_data(target_name, bpts, domain) > 0
    est = estimate_exit_probability(sim, bpts[tmask])
    out = args.out or "est.json"
    payload = {
        "estimate": est.point_estimate,
        "half_width_95": est.half_width_95,
        "n_effective": est.n_effective,
        "truncated_paths": est.truncated_paths,
        "seed": int(seed),
        "numba": NUMBA_ENABLED,
        **_meta(cfg),
    }
    write_json_report(out, payload)
    return _ok({"out": out, **payload})


def cmd_construct(cfg, args) -> int:
    kernel, domain = _validate_first(cfg)
    radii = ([int(x) for x in args.radii.split(",")] if args.radii
             else list(cfg.get("radii", [16, 32, 64])))
    schedule = cons.make_schedule(
        radii, cfg.dimension, anchor=cfg.get("anchor"),
        reference_offset=cfg.get("reference_offset", 8))
    tol = args.tol or cfg.get("tol", 1e-10)
    cand, log = cons.construct_harmonic(
        schedule, domain, kernel, tol=tol, data=cfg.get("data", "sphere-one"))
    out = args.out or "h.csv"
    write_field_csv(cand.closure, out, {**_meta(cfg), "window_radius": cand.window_radius})
    logout = args.log or "conv.json"
    write_json_report(logout, {
        "radii": log.radii,
        "deviations": log.deviations,
        "inner_radius": log.inner_radius,
        "stabilizing": log.stabilizing,
        "residual": cand.residual,
        **_meta(cfg),
    })
    return _ok({"out": out, "log": logout, "deviations": log.deviations, **_meta(cfg)})


def cmd_martin(cfg, args) -> int:
    kernel, domain = _validate_first(cfg)
    y = parse_point(args.y, cfg.dimension)
    anchor = tuple(cfg.get("anchor", (0,) * cfg.dimension))
    x0 = (anchor[0] + int(cfg.get("reference_offset", 8)),) + anchor[1:]
    factor = cfg.get("window_factor", 4)
    Rw = cons.martin_window_radius(y, anchor, factor)
    prof = cons.martin_profile(y, ball(anchor, Rw), domain, kernel, x0,
                               tol=args.tol or cfg.get("tol", 1e-10))
    inner = cfg.get("inner_radius", 8)
    inner_pts = enumerate_region(ball(anchor, inner), domain, kernel.steps_array())
    fld = prof.restrict(inner_pts)
    out = args.out or "martin.csv"
    write_field_csv(fld, out, {**_meta(cfg), "window_radius": Rw, "y": list(y)})
    return _ok({"out": out, "window_radius": Rw, **_meta(cfg)})


def cmd_uniq(cfg, args) -> int:
    kernel, domain = _validate_first(cfg)
    radii = list(cfg.get("radii", [16, 32, 64]))
    variants = cfg.get("data_variants", ["sphere-one", "sphere-upper-half"])
    inner = cfg.get("inner_radius", 8)
    tol = args.tol or cfg.get("tol", 1e-10)
    rows = []
    for R in radii:
        schedule = cons.make_schedule(
            [max(R // 2, inner + 1), R] if R // 2 > inner else [R],
            cfg.dimension, anchor=cfg.get("anchor"),
            reference_offset=cfg.get("reference_offset", 8))
        cands = [cons.construct_harmonic(schedule, domain, kernel, tol=tol,
                                         data=v)[0] for v in variants]
        rep = cons.uniqueness_check(cands, inner)
        rows.append({"R": R, "pairs": [
            {"a": a, "b": b, "deviation": dev, "witness": list(w)}
            for a, b, dev, w in rep.pairs]})
    out = args.out or "uniq.json"
    devs = [max(p["deviation"] for p in row["pairs"]) for row in rows]
    shrinking = all(b <= a for a, b in zip(devs, devs[1:]))
    write_json_report(out, {"rows": rows, "shrinking": shrinking, **_meta(cfg)})
    if not shrinking:
        return _fail({"reason": "cross-data deviation did not shrink",
                      "deviations": devs, "out": out})
    return _ok({"out": out, "deviations": devs, **_meta(cfg)})


def _grid_from(args, cfg, key, default):
    if args.grid:
        return [int(x) for x in args.grid.split(",")]
    grid = cfg.get("grid", {})
    return list(grid.get(key, default))


def cmd_lab(cfg, args) -> int:
    kernel, domain = _validate_first(cfg)
    tol = args.tol or cfg.get("tol", 1e-10)
    y = (0,) * cfg.dimension
    exp = args.experiment
    constants, witnesses = [], []
    grid_used: dict = {}
    failures = []

    if exp == "harnack":
        Rs = _grid_from(args, cfg, "R", [4, 8, 16])
        grid_used = {"R": Rs}
        center = (2 * max(Rs) + 2,) + y[1:]
        for R in Rs:
            res = labmod.harnack_constant(center, R, kernel, tol=tol)
            loc = labmod.local_harnack_constant(center, R, kernel, tol=tol)
            constants.append({"R": R, "constant": res.constant,
                              "one_step_max": loc.max_ratio,
                              "one_step_bound": loc.bound})
            witnesses.append({"R": R, "data_point": list(res.witness_data_point),
                              "argmax": list(res.argmax_point),
                              "argmin": list(res.argmin_point)})
            if loc.max_ratio > loc.bound * (1 + 1e-9):
                failures.append(f"one-step ratio exceeds 1/alpha at R={R}")
    elif exp == "carleson":
        Rs = _grid_from(args, cfg, "R", [8, 16, 32])
        grid_used = {"R": Rs}
        for R in Rs:
            res = labmod.carleson_constant(y, R, domain, kernel, tol=tol)
            constants.append({"R": R, "constant": res.constant})
            witnesses.append({"R": R, "data_point": list(res.witness_data_point),
                              "at": list(res.witness_point)})
    elif exp == "prop1":
        Rs = _grid_from(args, cfg, "R", [8, 16])
        grid_used = {"R": Rs}
        for R in Rs:
            res = labmod.contraction_factor(y, R, domain, kernel, tol=tol)
            constants.append({"R": R, "rho": res.rho, "margin": 1.0 - res.rho})
            witnesses.append({"R": R, "data_point": list(res.witness_data_point)})
            if not res.rho < 1.0:
                failures.append(f"contraction factor >= 1 at R={R}")
    elif exp == "bhp":
        Rs = _grid_from(args, cfg, "R", [4, 8])
        K = int(cfg.get("grid", {}).get("K", 4))
        grid_used = {"R": Rs, "K": K}
        for R in Rs:
            res = labmod.boundary_harnack_constant(y, R, K, domain, kernel, tol=tol)
            constants.append({"R": R, "K": K, "constant": res.constant})
            witnesses.append({"R": R, "at": list(res.witness_point)})
    elif exp == "lemma2":
        Ks = _grid_from(args, cfg, "K", [2, 4, 8, 16])
        r = int(cfg.get("grid", {}).get("r", 4))
        grid_used = {"K": Ks, "r": r}
        try:
            res = labmod.collar_exit_onset(y, r, domain, kernel, K_grid=Ks, tol=tol)
            constants.append({"onset": res.onset,
                              "table": [[K, m] for K, m in res.table]})
        except OnsetNotFoundError as e:
            constants.append({"onset": None,
                              "table": [[K, m] for K, m in e.table]})
            failures.append("no K in the grid reached exit ratio >= 1")
    elif exp == "decay":
        Ks = _grid_from(args, cfg, "K", [2, 4, 8, 16])
        r = int(cfg.get("grid", {}).get("r", 4))
        grid_used = {"K": Ks, "r": r}
        res = labmod.lateral_decay(y, r, domain, kernel, K_grid=Ks, tol=tol)
        constants.append({"table": [[K, v] for K, v in res.table],
                          "slope": res.slope,
                          "empty_geometry": res.empty_geometry})
        if not res.empty_geometry and (res.slope is None or res.slope >= 0):
            failures.append("lateral decay slope is not negative")
        prof = labmod.boundary_decay_profile(y, r, domain, kernel, tol=tol)
        constants.append({"beta": prof.beta, "amplitude": prof.amplitude,
                          "n_levels": prof.n_levels})
    elif exp == "growth":
        Rs = _grid_from(args, cfg, "R", [8, 16])
        grid_used = {"R": Rs}
        for R in Rs:
            res = labmod.interior_growth_exponent(y, R, domain, kernel, tol=tol)
            constants.append({"R": R, "gamma": res.gamma,
                              "amplitude": res.amplitude})
    else:
        raise ConfigError(f"unknown lab experiment {exp!r}")

    report = LabReport(
        experiment=exp, config_digest=cfg.digest, grid=grid_used,
        constants=constants, witnesses=witnesses,
        tolerances={"solver": tol, "uniformity_band": 2.0},
    )
    out = args.out or f"{exp}.json"
    report.write(out)
    if failures:
        return _fail({"experiment": exp, "failures": failures, "out": out})
    return _ok({"experiment": exp, "out": out, "constants": constants,
                **_meta(cfg)})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="walklab",
        description="Killed-random-walk potential theory laboratory")
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", help="output artifact path")
    p.add_argument("--seed", type=int, help="RNG seed override")
    p.add_argument("--tol", type=float, help="solver tolerance override")
    p.add_argument("--threads", type=int, help="numba thread cap")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("validate")
    ps = sub.add_parser("solve")
    ps.add_argument("--region")
    ps.add_argument("--data")
    pm = sub.add_parser("mc")
    pm.add_argument("--region")
    pm.add_argument("--start")
    pm.add_argument("--paths", type=int)
    pm.add_argument("--target")
    pc = sub.add_parser("construct")
    pc.add_argument("--radii")
    pc.add_argument("--log")
    pk = sub.add_parser("martin")
    pk.add_argument("--y", required=True)
    pl = sub.add_parser("lab")
    pl.add_argument("experiment",
                    choices=["harnack", "carleson", "prop1", "bhp",
                             "lemma2", "decay", "growth"])
    pl.add_argument("--grid")
    sub.add_parser("uniq")
    return p


_COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "mc": cmd_mc,
    "construct": cmd_construct,
    "martin": cmd_martin,
    "lab": cmd_lab,
    "uniq": cmd_uniq,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads and NUMBA_ENABLED:
        import numba

        numba.set_num_threads(args.threads)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(json.dumps({"status": "config-error", "error": str(e)}))
        return 2
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(json.dumps({"status": "config-error", "error": str(e)}))
        return 2
    except WalkLabError as e:
        payload = {"error": type(e).__name__, "message": str(e)}
        if getattr(e, "point", None) is not None:
            payload["witness_point"] = [int(c) for c in e.point]
        if getattr(e, "condition", None) is not None:
            payload["condition"] = e.condition
        if getattr(e, "magnitude", None) is not None:
            payload["magnitude"] = float(e.magnitude)
        return _fail(payload)


if __name__ == "__main__":
    sys.exit(main())
