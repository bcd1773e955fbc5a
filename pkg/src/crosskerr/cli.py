"""Command-line drivers: config in, plot-ready CSV/JSON plus a manifest out.

Exit codes: 0 success, 2 validation error, 1 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .circuit import derive_params
from .config import ConfigError, RunConfig, load_config
from .dynamics import IntegrationError, simulate_records, write_records_csv
from .imperfect import (g_qa_from_asymmetry, g_qc_from_misalignment, purcell_vs_flux,
                        write_purcell_csv)
from .polariton import SystemParams, hybridization_angle, polariton_params
from .readout import (fidelity_experiment, qnd_experiment, write_histogram_csv,
                      write_report_json)
from .spectro import (conditional_shift, extract_avoided_crossing, flux_map, sweep_frequency,
                      write_curves_csv, write_tracks_csv)

COMMANDS = ("derive-params", "spectroscopy", "flux-map", "trajectories", "histogram", "qnd", "purcell")
STOCHASTIC = {"trajectories", "histogram", "qnd"}


def _write_json(path: Path, data) -> None:
    write_report_json(path, data)


def _system(cfg: RunConfig) -> SystemParams:
    cfg.require("system")
    return cfg.system


# ----------------------------------------------------------------- commands

def cmd_derive_params(cfg: RunConfig, out: Path, seed) -> list:
    cfg.require("circuit")
    cp = cfg.circuit
    dp = derive_params(cp)
    sp = cfg.system or SystemParams.from_derived(dp, cp.omega_c, cp.g_ac, 0.0, 0.0)
    pp = polariton_params(sp, -1, "ground")
    theta = hybridization_angle(sp.omega_a_prime, sp.omega_c, sp.g_ac, -1, sp.g_zz)
    resid = {
        "theta_identity": math.tan(2 * theta) - 2 * sp.g_ac / (sp.omega_a_bar - sp.omega_c),
        "chi_sum_plus_g_zz": pp.chi_l + pp.chi_u + sp.g_zz,
        "kappa_sum": pp.kappa_l + pp.kappa_u - sp.kappa_c - sp.kappa_a,
        "frequency_sum_rule": pp.omega_l_bar + pp.omega_u_bar - sp.omega_c - sp.omega_a_bar,
    }
    report = {"flux": cp.flux, "derived": dp.as_dict(), "system": sp.as_dict(),
              "polariton": pp.as_dict(), "residuals": resid}
    _write_json(out / "derived_params.json", report)
    return ["derived_params.json"]


def cmd_spectroscopy(cfg: RunConfig, out: Path, seed) -> list:
    sp = _system(cfg)
    grid = cfg.frequency_grid()
    flux = cfg.circuit.flux if cfg.circuit is not None else None
    curves = [sweep_frequency(sp, grid, 1 if pi else -1, "ground", flux)
              for pi in cfg.sweep["pi_pulse"]]
    write_curves_csv(out / "spectroscopy.csv", curves)
    files = ["spectroscopy.csv"]
    sig = {c.sigma_z for c in curves}
    if sig == {-1, 1}:
        cg = next(c for c in curves if c.sigma_z == -1)
        ce = next(c for c in curves if c.sigma_z == 1)
        sh = conditional_shift(cg, ce)
        fits = {lab: [vars(f) for f in fs] for lab, fs in (("g", sh.fits_g), ("e", sh.fits_e))}
        _write_json(out / "shifts.json", {
            "shift_l_MHz": sh.shift_l * 1e3, "shift_u_MHz": sh.shift_u * 1e3,
            "err_l_MHz": sh.err_l * 1e3, "err_u_MHz": sh.err_u * 1e3,
            "total_MHz": sh.total * 1e3, "minus_2_g_zz_MHz": -2 * sp.g_zz * 1e3, "fits": fits})
        files.append("shifts.json")
    return files


def cmd_flux_map(cfg: RunConfig, out: Path, seed) -> list:
    cfg.require("circuit")
    sp = _system(cfg)
    fl = cfg.sweep["flux_list"]
    ka = {float(f): cfg.kappa_a_at(f) for f in fl}
    fm = flux_map(cfg.circuit, fl, cfg.frequency_grid(), sp.kappa_c, ka, sp.drive_strength,
                  tuple(cfg.sweep["dims"]))
    write_tracks_csv(out / "flux_tracks.csv", fm)
    write_curves_csv(out / "flux_curves.csv", fm.curves_g + fm.curves_e)
    files = ["flux_tracks.csv", "flux_curves.csv"]
    try:
        cf = extract_avoided_crossing(fm.tracks["omega_l"], fm.tracks["omega_u"])
        split = fm.tracks["omega_u"] - fm.tracks["omega_l"]
        _write_json(out / "crossing.json", {"g_ac": cf.g_ac, "omega_c": cf.omega_c,
                                            "residual": cf.residual, "omega_a_bar": cf.omega_a_bar,
                                            "min_splitting": float(split.min())})
        files.append("crossing.json")
    except ValueError as exc:
        print(f"warning: crossing fit skipped: {exc}", file=sys.stderr)
    return files


def cmd_trajectories(cfg: RunConfig, out: Path, seed) -> list:
    sp = _system(cfg)
    r = cfg.run
    ss_g, ss_e = np.random.SeedSequence(seed).spawn(2)
    kw = dict(readout=cfg.readout, thermal_pop=r["thermal_pop"], pi_error=r["pi_error"],
              f_leak=r["f_leak"])
    bg = simulate_records(sp, "g", r["n_records"], r["duration_ns"], seed=ss_g, **kw)
    be = simulate_records(sp, "e", r["n_records"], r["duration_ns"], seed=ss_e, **kw)
    write_records_csv(out / "records_g.csv", bg)
    write_records_csv(out / "records_e.csv", be)
    with open(out / "traces.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ns", "mean_g", "std_g", "mean_e", "std_e"])
        mg, sg = bg.I.mean(0), bg.I.std(0)
        me, se = be.I.mean(0), be.I.std(0)
        for k, t in enumerate(bg.times):
            w.writerow([repr(float(t))] + [repr(float(v[k])) for v in (mg, sg, me, se)])
    _write_json(out / "trajectories.json", {
        "jump_fraction_g": float(bg.has_jump.mean()), "jump_fraction_e": float(be.has_jump.mean()),
        "levels": bg.targets["levels"], "snr": bg.targets["snr"],
        "drive_freq": bg.targets["drive_freq"], "n_records": r["n_records"],
        "duration_ns": r["duration_ns"]})
    return ["records_g.csv", "records_e.csv", "traces.csv", "trajectories.json"]


def cmd_histogram(cfg: RunConfig, out: Path, seed) -> list:
    sp = _system(cfg)
    r = cfg.run
    rep, det = fidelity_experiment(sp, r["n_records"], cfg.readout, r["thermal_pop"], r["pi_error"],
                                   r["f_leak"], seed, r["herald"], r["herald_wait_ns"])
    write_histogram_csv(out / "histogram.csv", det["hist"])
    data = rep.as_dict()
    data["fit"] = det["fit"].as_dict()
    _write_json(out / "fidelity.json", data)
    return ["histogram.csv", "fidelity.json"]


def cmd_qnd(cfg: RunConfig, out: Path, seed) -> list:
    sp = _system(cfg)
    r, q = cfg.run, cfg.qnd
    spec = (q["segment_start_ns"], q["segment_stop_ns"], q["segment_width_ns"])
    duration = max(r["duration_ns"], q["segment_stop_ns"])
    rep, det = qnd_experiment(sp, r["n_records"], cfg.readout, duration, spec, r["thermal_pop"],
                              r["pi_error"], r["f_leak"], seed)
    data = rep.as_dict()
    data["threshold"] = det["threshold"]
    _write_json(out / "qnd.json", data)
    return ["qnd.json"]


def cmd_purcell(cfg: RunConfig, out: Path, seed) -> list:
    cfg.require("circuit")
    sp = _system(cfg)
    cp, imp = cfg.circuit, cfg.imperfections
    fl = cfg.sweep["flux_list"]
    ka = {float(f): cfg.kappa_a_at(f) for f in fl}
    rows = purcell_vs_flux(cp, imp, fl, sp.kappa_c, ka, tuple(cfg.sweep["dims"]),
                           cfg.sweep["measured_T1"])
    write_purcell_csv(out / "purcell.csv", rows)
    dp = derive_params(cp)
    _write_json(out / "purcell.json", {
        "g_qa_MHz": g_qa_from_asymmetry(imp.d_J, dp.omega_q_harm, dp.omega_a_harm,
                                        dp.inductance_ratio) * 1e3,
        "g_qc_MHz": g_qc_from_misalignment(imp.theta_m, cp.g_ac) * 1e3,
        "d_J": imp.d_J, "theta_m_deg": imp.theta_m, "rows": rows})
    return ["purcell.csv", "purcell.json"]


HANDLERS = {"derive-params": cmd_derive_params, "spectroscopy": cmd_spectroscopy,
            "flux-map": cmd_flux_map, "trajectories": cmd_trajectories,
            "histogram": cmd_histogram, "qnd": cmd_qnd, "purcell": cmd_purcell}


# ----------------------------------------------------------------- plumbing

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig, seed, files) -> None:
    manifest = {
        "command": command,
        "config": cfg.raw,
        "config_hash": cfg.config_hash,
        "seed": seed,
        "versions": {"crosskerr": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "files": {f: _sha256(out / f) for f in files},
    }
    _write_json(out / f"manifest_{command.replace('-', '_')}.json", manifest)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crosskerr", description="Cross-Kerr readout simulation toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", default=None, help="output directory (default: config 'output' or '.')")
        s.add_argument("--seed", type=int, default=None, help="RNG seed (unsigned 64-bit)")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.run["seed"]
        if seed is not None and not 0 <= seed < 2**64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        if args.command in STOCHASTIC and seed is None:
            raise ConfigError("readout.seed", "seed required for stochastic runs (or pass --seed)")
        out = Path(args.out or cfg.output or ".")
        out.mkdir(parents=True, exist_ok=True)
        files = HANDLERS[args.command](cfg, out, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"config error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return 2
    except (IntegrationError, ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    write_manifest(out, args.command, cfg, seed, files)
    print(json.dumps({"command": args.command, "out": str(out), "files": files}, sort_keys=True))
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
