"""Run configuration: loading and validation of the JSON config file.

Units per field: GHz for frequencies and couplings, MHz for decay rates
and drive strength, us for T1/T2*, ns for times, fF for capacitances, nH
for inductances, degrees for the misalignment angle.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .circuit import CircuitParams, derive_params, squid_chain_table
from .dynamics import ReadoutSpec
from .imperfect import ImperfectionParams
from .polariton import SystemParams


class ConfigError(ValueError):
    """Validation failure; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


SECTIONS = ("circuit", "system", "readout", "sweep", "qnd", "imperfections", "output")
SYSTEM_FREQ_FIELDS = ("omega_q_prime", "omega_a_prime", "omega_c", "g_zz", "g_ac")
SYSTEM_RATE_FIELDS = ("kappa_c", "kappa_a", "T1", "T2_star", "drive_strength", "drive_freq", "eta")
READOUT_DEFAULTS = {"n_photons": 2.0, "window_ns": 50.0, "dt_ns": 2.0, "drive_freq": None,
                    "duration_ns": 1000.0, "n_records": 1000, "thermal_pop": 0.024,
                    "pi_error": 0.014, "f_leak": 0.005, "herald": True, "herald_wait_ns": 300.0,
                    "seed": None}
SWEEP_DEFAULTS = {"freq_start": 6.85, "freq_stop": 8.05, "freq_points": 2401,
                  "flux_list": list(range(10)), "kappa_a_of_n": None, "pi_pulse": [False, True],
                  "measured_T1": None, "dims": [6, 8, 8]}
QND_DEFAULTS = {"segment_start_ns": 150.0, "segment_stop_ns": 1000.0, "segment_width_ns": 30.0}


def _num(path, v, integer=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(v).__name__}")
    if not math.isfinite(v) and not (v == math.inf):
        raise ConfigError(path, "must be finite")
    if integer:
        if int(v) != v:
            raise ConfigError(path, "expected an integer")
        return int(v)
    return float(v)


def _section(raw: dict, name: str, allowed, required=()) -> dict:
    sec = raw.get(name)
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(name, "section must be an object")
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown field")
    for k in required:
        if k not in sec:
            raise ConfigError(f"{name}.{k}", "required field missing")
    return sec


def _parse_la_table(v) -> dict:
    path = "circuit.L_a_of_n"
    if not isinstance(v, dict) or not v:
        raise ConfigError(path, "expected a non-empty object")
    if set(v) <= {"L_a0", "period", "n_max"}:
        for k in ("L_a0", "period", "n_max"):
            if k not in v:
                raise ConfigError(f"{path}.{k}", "required field missing")
        return squid_chain_table(_num(f"{path}.L_a0", v["L_a0"]), _num(f"{path}.period", v["period"]),
                                 _num(f"{path}.n_max", v["n_max"], integer=True))
    table = {}
    for k, val in v.items():
        try:
            n = int(k)
        except ValueError:
            raise ConfigError(f"{path}.{k}", "keys must be integer flux indices") from None
        table[n] = _num(f"{path}.{k}", val)
        if table[n] <= 0:
            raise ConfigError(f"{path}.{k}", "inductance must be positive")
    return table


def _flux_map(path: str, v) -> dict | None:
    if v is None:
        return None
    if not isinstance(v, dict):
        raise ConfigError(path, "expected an object flux -> value")
    out = {}
    for k, val in v.items():
        try:
            out[float(k)] = _num(f"{path}.{k}", val)
        except ValueError:
            raise ConfigError(f"{path}.{k}", "keys must be flux values") from None
    return out


@dataclass
class RunConfig:
    """Validated run configuration."""

    circuit: CircuitParams | None
    system: SystemParams | None
    readout: ReadoutSpec
    run: dict
    sweep: dict
    qnd: dict
    imperfections: ImperfectionParams
    output: str | None = None
    raw: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def require(self, *names: str) -> None:
        for n in names:
            if getattr(self, n) is None:
                raise ConfigError(n, "section required for this command")

    def frequency_grid(self) -> np.ndarray:
        s = self.sweep
        return np.linspace(s["freq_start"], s["freq_stop"], s["freq_points"])

    def kappa_a_at(self, flux: float) -> float:
        table = self.sweep.get("kappa_a_of_n")
        if table and float(flux) in table:
            return table[float(flux)]
        return self.system.kappa_a


def _build_circuit(raw: dict) -> CircuitParams | None:
    allowed = [f.name for f in fields(CircuitParams)]
    sec = _section(raw, "circuit", allowed, required=("E_J", "C_S", "C_t", "L_a_of_n"))
    if not sec:
        return None
    kw = {"d_J": 0.0}
    for k, v in sec.items():
        if k == "L_a_of_n":
            kw[k] = _parse_la_table(v)
        else:
            kw[k] = _num(f"circuit.{k}", v, allow_none=(k == "L_J"))
    try:
        cp = CircuitParams(**kw)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError("circuit", str(exc)) from None
    return cp


def _build_system(raw: dict, cp: CircuitParams | None) -> SystemParams | None:
    sec = _section(raw, "system", SYSTEM_FREQ_FIELDS + SYSTEM_RATE_FIELDS)
    if not sec:
        return None
    vals = {k: _num(f"system.{k}", v, allow_none=(k == "drive_freq")) for k, v in sec.items()}
    for k in ("kappa_c", "kappa_a"):
        if k not in vals:
            raise ConfigError(f"system.{k}", "required field missing")
    have = [k for k in SYSTEM_FREQ_FIELDS if k in vals]
    if len(have) < len(SYSTEM_FREQ_FIELDS):
        if cp is None:
            missing = [k for k in SYSTEM_FREQ_FIELDS if k not in vals][0]
            raise ConfigError(f"system.{missing}", "required when no circuit section is given")
        try:
            dp = derive_params(cp)
        except (ValueError, KeyError) as exc:
            raise ConfigError("circuit", str(exc)) from None
        derived = {"omega_q_prime": dp.omega_q_prime, "omega_a_prime": dp.omega_a_prime,
                   "omega_c": cp.omega_c, "g_zz": dp.g_zz, "g_ac": cp.g_ac}
        vals = {**derived, **vals}
    try:
        return SystemParams(**vals)
    except ValueError as exc:
        raise ConfigError("system", str(exc)) from None


def build_config(raw: dict) -> RunConfig:
    """Validate a config dict. Raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ConfigError(unknown[0], "unknown section")
    cp = _build_circuit(raw)
    sp = _build_system(raw, cp)

    rsec = _section(raw, "readout", READOUT_DEFAULTS)
    run = dict(READOUT_DEFAULTS)
    for k, v in rsec.items():
        p = f"readout.{k}"
        if k == "herald":
            if not isinstance(v, bool):
                raise ConfigError(p, "expected true or false")
            run[k] = v
        elif k in ("n_records", "seed"):
            run[k] = _num(p, v, integer=True, allow_none=(k == "seed"))
            if k == "seed" and run[k] is not None and not 0 <= run[k] < 2**64:
                raise ConfigError(p, "seed must be an unsigned 64-bit integer")
            if k == "n_records" and run[k] < 1:
                raise ConfigError(p, "must be >= 1")
        else:
            run[k] = _num(p, v, allow_none=(k == "drive_freq"))
    for k in ("thermal_pop", "pi_error", "f_leak"):
        if not 0 <= run[k] < 1:
            raise ConfigError(f"readout.{k}", "must be in [0, 1)")
    try:
        ro = ReadoutSpec(run["n_photons"], run["window_ns"], run["dt_ns"], run["drive_freq"])
    except ValueError as exc:
        raise ConfigError("readout", str(exc)) from None

    ssec = _section(raw, "sweep", SWEEP_DEFAULTS)
    sweep = dict(SWEEP_DEFAULTS)
    for k, v in ssec.items():
        p = f"sweep.{k}"
        if k == "freq_points":
            sweep[k] = _num(p, v, integer=True)
        elif k in ("freq_start", "freq_stop"):
            sweep[k] = _num(p, v)
        elif k in ("flux_list", "dims", "pi_pulse"):
            if not isinstance(v, list) or not v:
                raise ConfigError(p, "expected a non-empty list")
            if k == "pi_pulse":
                if not all(isinstance(x, bool) for x in v):
                    raise ConfigError(p, "expected a list of booleans")
                sweep[k] = v
            else:
                sweep[k] = [_num(f"{p}[{i}]", x, integer=(k == "dims")) for i, x in enumerate(v)]
        else:
            sweep[k] = _flux_map(p, v)
    if sweep["freq_points"] < 3 or sweep["freq_stop"] <= sweep["freq_start"]:
        raise ConfigError("sweep.freq_points", "need >= 3 points on an increasing range")
    if len(sweep["dims"]) != 3 or min(sweep["dims"]) < 4:
        raise ConfigError("sweep.dims", "three truncations, each >= 4")

    if cp is not None:
        checks = [("circuit.flux", cp.flux)]
        if "flux_list" in ssec:
            checks += [(f"sweep.flux_list[{i}]", f) for i, f in enumerate(sweep["flux_list"])]
        for p, f in checks:
            try:
                cp.coupling_inductance(f)
            except KeyError as exc:
                raise ConfigError(p, exc.args[0]) from None

    qsec = _section(raw, "qnd", QND_DEFAULTS)
    qnd = {**QND_DEFAULTS, **{k: _num(f"qnd.{k}", v) for k, v in qsec.items()}}
    if qnd["segment_width_ns"] <= 0 or qnd["segment_stop_ns"] <= qnd["segment_start_ns"]:
        raise ConfigError("qnd", "segments must have positive width on an increasing range")

    isec = _section(raw, "imperfections", ("d_J", "theta_m"))
    try:
        imp = ImperfectionParams(**{k: _num(f"imperfections.{k}", v) for k, v in isec.items()})
    except ValueError as exc:
        raise ConfigError("imperfections", str(exc)) from None

    out = raw.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output", "expected a directory path string")
    return RunConfig(cp, sp, ro, run, sweep, qnd, imp, out, raw)


def load_config(path) -> RunConfig:
    """Read and validate a JSON config file."""
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("<file>", f"config not found: {p}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return build_config(raw)
