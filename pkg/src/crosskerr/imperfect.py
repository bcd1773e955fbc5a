"""Residual transverse couplings and Purcell-limited qubit lifetime."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .circuit import CircuitParams, build_full_hamiltonian, derive_params, label_spectrum
from .qops import ladder

MODES = ("asym", "misalign", "both")


@dataclass(frozen=True)
class ImperfectionParams:
    """Junction asymmetry d_J and field misalignment angle theta_m (degrees)."""

    d_J: float = 0.0
    theta_m: float = 0.0

    def __post_init__(self):
        if abs(self.d_J) >= 1:
            raise ValueError("|d_J| must be < 1")
        if abs(self.theta_m) > 90:
            raise ValueError("|theta_m| must be <= 90 degrees")


def g_qa_from_asymmetry(d_J: float, omega_q_harm: float, omega_a_harm: float,
                        inductance_ratio: float) -> float:
    """Qubit-ancilla transverse coupling (GHz) from junction asymmetry.

    ``g_qa = -(d_J/2) sqrt(w_q w_a / (1 + 2 L_J/L_a))`` with harmonic frequencies.
    """
    return -0.5 * d_J * math.sqrt(omega_q_harm * omega_a_harm / inductance_ratio)


def g_qc_from_misalignment(theta_m: float, g_ac: float) -> float:
    """Qubit-cavity coupling ``tan(theta_m) * g_ac`` for a misalignment in degrees."""
    if abs(theta_m) >= 90:
        raise ValueError("|theta_m| must be < 90 degrees")
    return math.tan(math.radians(theta_m)) * g_ac


@dataclass
class PurcellResult:
    gamma: float  # 1/us
    T1: float  # us, inf when gamma == 0
    elements: dict

    def as_dict(self) -> dict:
        return {"gamma_per_us": self.gamma, "T1_us": self.T1, **self.elements}


def _t1(gamma: float) -> float:
    return math.inf if gamma <= 0 else 1.0 / gamma


def purcell_analytic(kappa_c: float, kappa_a: float, g_qc: float, g_qa: float,
                     delta_qc: float, delta_qa: float) -> PurcellResult:
    """Gamma = kappa_c (g_qc/D_qc)^2 + kappa_a (g_qa/D_qa)^2.

    Decay rates in MHz (value/2pi); couplings and detunings in any common
    unit. Returns the rate in 1/us.
    """
    if delta_qc == 0 or delta_qa == 0:
        raise ValueError("detunings must be non-zero")
    pc = (g_qc / delta_qc) ** 2
    pa = (g_qa / delta_qa) ** 2
    gamma = 2 * math.pi * (kappa_c * pc + kappa_a * pa)
    return PurcellResult(gamma, _t1(gamma), {"cavity_part": 2 * math.pi * kappa_c * pc,
                                             "ancilla_part": 2 * math.pi * kappa_a * pa})


def _imperfect_circuit(cp: CircuitParams, imp: ImperfectionParams, mode: str) -> CircuitParams:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    d_J = imp.d_J if mode in ("asym", "both") else 0.0
    g_qc = g_qc_from_misalignment(imp.theta_m, cp.g_ac) if mode in ("misalign", "both") else 0.0
    return replace(cp, d_J=d_J, g_qc=g_qc)


def purcell_numeric(cp: CircuitParams, imp: ImperfectionParams, flux: float | None,
                    kappa_c: float, kappa_a: float, mode: str = "both",
                    dims: Sequence[int] = (6, 8, 8)) -> PurcellResult:
    """Purcell rate from dressed states of the full circuit.

    ``Gamma = kappa_c |<g|c|e>|^2 + kappa_a |<g|a|e>|^2`` with |g>, |e>
    the eigenstates labelled (0,0,0) and (1,0,0).
    """
    cpi = _imperfect_circuit(cp, imp, mode)
    f = cp.flux if flux is None else float(flux)
    H = build_full_hamiltonian(cpi, f, dims)
    spec = label_spectrum(H, flux=f)
    g = spec.vector((0, 0, 0))
    e = spec.vector((1, 0, 0))
    mc = complex(g.conj() @ (ladder(H.space, "cavity").matrix @ e))
    ma = complex(g.conj() @ (ladder(H.space, "ancilla").matrix @ e))
    gamma = 2 * math.pi * (kappa_c * abs(mc) ** 2 + kappa_a * abs(ma) ** 2)
    return PurcellResult(gamma, _t1(gamma), {
        "cavity_element": abs(mc), "ancilla_element": abs(ma),
        "omega_q": spec.energy((1, 0, 0)) - spec.energy((0, 0, 0)),
        "g_qc": cpi.g_qc, "d_J": cpi.d_J, "mode": mode})


def purcell_vs_flux(cp: CircuitParams, imp: ImperfectionParams, fluxes: Sequence[float],
                    kappa_c: float, kappa_a, dims: Sequence[int] = (6, 8, 8),
                    measured: Mapping | None = None) -> list:
    """T1 for the asym / misalign / both variants at each flux.

    ``kappa_a`` is a number or a mapping flux -> MHz. Returns rows of
    dicts sorted by flux.
    """
    rows = []
    for f in sorted(float(x) for x in fluxes):
        ka = kappa_a[f] if isinstance(kappa_a, Mapping) else float(kappa_a)
        row = {"flux": f, "T1_measured": (measured or {}).get(f)}
        for mode in MODES:
            row[f"T1_{mode}"] = purcell_numeric(cp, imp, f, kappa_c, ka, mode, dims).T1
        dp = derive_params(cp, f)
        row["g_qa"] = g_qa_from_asymmetry(imp.d_J, dp.omega_q_harm, dp.omega_a_harm, dp.inductance_ratio)
        rows.append(row)
    return rows


def write_purcell_csv(path, rows: Sequence[dict]) -> None:
    cols = ["flux", "T1_measured", "T1_asym", "T1_misalign", "T1_both"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow(["" if r.get(c) is None else repr(float(r[c])) for c in cols])
