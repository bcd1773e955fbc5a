"""Closed-form ancilla-cavity polariton model with a cross-Kerr coupled qubit.

Frequencies and couplings are in GHz, decay rates and drive strengths in
MHz (all as angular value / 2pi). Qubit times are in microseconds.

Three conventions for the qubit-conditional polaritons are available via
``frame``:

``"ground"``
    Polariton operators defined at the qubit-ground angle
    ``theta_bar(-1)``; frequencies follow ``omega_j + chi_j * sigma_z``.
    Line weights, decay rates and drive split use ``theta_bar(sigma_z)``.
``"conditional"``
    Everything from ``theta_bar(sigma_z)``; frequencies are the exact
    eigenvalues of the ancilla-cavity block for that qubit state.
``"bare"``
    Angle evaluated without the cross-Kerr shift (``sigma_z = 0``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from .qops import HilbertSpace, Operator

FRAMES = ("ground", "conditional", "bare")


@dataclass(frozen=True)
class SystemParams:
    """Quantum-optics parameters of qubit, ancilla and cavity.

    Parameters
    ----------
    omega_q_prime, omega_a_prime, omega_c : float
        Renormalised qubit and ancilla frequencies and cavity frequency, GHz.
    g_zz, g_ac : float
        Cross-Kerr and ancilla-cavity couplings, GHz.
    kappa_c, kappa_a : float
        Cavity and ancilla decay rates, MHz.
    T1, T2_star : float
        Qubit relaxation and dephasing times, us.
    drive_strength : float
        Cavity drive Omega, MHz.
    drive_freq : float or None
        Drive frequency, GHz.
    eta : float
        Measurement quantum efficiency.
    """

    omega_q_prime: float
    omega_a_prime: float
    omega_c: float
    g_zz: float
    g_ac: float
    kappa_c: float
    kappa_a: float
    T1: float = math.inf
    T2_star: float = math.inf
    drive_strength: float = 0.1
    drive_freq: float | None = None
    eta: float = 1.0

    def __post_init__(self):
        for name in ("kappa_c", "kappa_a", "T1", "T2_star", "drive_strength"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (0 < self.eta <= 1):
            raise ValueError("eta must be in (0, 1]")
        if self.g_zz < 0 or self.g_ac < 0:
            raise ValueError("couplings must be non-negative")
        if abs(self.omega_a_prime - self.omega_c) > 10 * self.g_ac:
            warnings.warn("ancilla and cavity far detuned: weak hybridisation", stacklevel=2)

    @property
    def omega_a_bar(self) -> float:
        """Ancilla frequency with the qubit in g."""
        return self.omega_a_prime + self.g_zz

    @property
    def kappa_q(self) -> float:
        """Qubit relaxation rate 1/T1 in 1/us."""
        return 0.0 if math.isinf(self.T1) else 1.0 / self.T1

    @property
    def gamma_q(self) -> float:
        """Qubit pure dephasing rate 1/T2* in 1/us."""
        return 0.0 if math.isinf(self.T2_star) else 1.0 / self.T2_star

    def replace(self, **kw) -> "SystemParams":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_derived(cls, dp, omega_c: float, g_ac: float, kappa_c: float, kappa_a: float,
                     **kw) -> "SystemParams":
        """Build from :class:`crosskerr.circuit.DerivedParams`."""
        return cls(omega_q_prime=dp.omega_q_prime, omega_a_prime=dp.omega_a_prime,
                   omega_c=omega_c, g_zz=dp.g_zz, g_ac=g_ac, kappa_c=kappa_c,
                   kappa_a=kappa_a, **kw)


def hybridization_angle(omega_a_prime: float, omega_c: float, g_ac: float,
                        sigma_z: float = 0, g_zz: float = 0.0) -> float:
    """Mixing angle ``0.5 * arctan(2 g_ac / (omega_a' - g_zz sigma_z - omega_c))`` in (0, pi/2)."""
    return 0.5 * math.atan2(2 * g_ac, omega_a_prime - g_zz * sigma_z - omega_c)


def _mode_freqs(theta: float, omega_a: float, omega_c: float, g_ac: float):
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    w_u = s2 * omega_c + c2 * omega_a + math.sin(2 * theta) * g_ac
    w_l = c2 * omega_c + s2 * omega_a - math.sin(2 * theta) * g_ac
    return w_l, w_u


@dataclass(frozen=True)
class PolaritonParams:
    """Polariton frequencies (GHz), shifts (GHz), decays and drives (MHz)."""

    theta: float
    theta_rot: float
    omega_l: float
    omega_u: float
    omega_l_bar: float
    omega_u_bar: float
    chi_l: float
    chi_u: float
    kappa_l: float
    kappa_u: float
    Omega_l: float
    Omega_u: float
    sigma_z: float
    frame: str

    def as_dict(self) -> dict:
        return asdict(self)


def polariton_params(sp: SystemParams, sigma_z: float = -1, frame: str = "ground") -> PolaritonParams:
    """Polariton frequencies, cross-Kerr shifts, decays and drive split.

    ``omega_l/u`` are the polariton frequencies without the qubit term,
    ``omega_l/u_bar = omega_j + chi_j * sigma_z`` the qubit-conditional
    ones, ``chi_l = -g_zz sin^2`` and ``chi_u = -g_zz cos^2``.
    """
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}")
    ang = lambda s: hybridization_angle(sp.omega_a_prime, sp.omega_c, sp.g_ac, s, sp.g_zz)
    theta = ang(sigma_z)
    theta_rot = {"ground": ang(-1), "conditional": theta, "bare": ang(0)}[frame]
    if frame == "bare":
        theta = theta_rot
    w_l, w_u = _mode_freqs(theta_rot, sp.omega_a_prime, sp.omega_c, sp.g_ac)
    s2, c2 = math.sin(theta_rot) ** 2, math.cos(theta_rot) ** 2
    chi_l, chi_u = -sp.g_zz * s2, -sp.g_zz * c2
    sw, cw = math.sin(theta) ** 2, math.cos(theta) ** 2
    return PolaritonParams(
        theta=theta, theta_rot=theta_rot,
        omega_l=w_l, omega_u=w_u,
        omega_l_bar=w_l + chi_l * sigma_z, omega_u_bar=w_u + chi_u * sigma_z,
        chi_l=chi_l, chi_u=chi_u,
        kappa_l=sp.kappa_c * cw + sp.kappa_a * sw,
        kappa_u=sp.kappa_c * sw + sp.kappa_a * cw,
        Omega_l=sp.drive_strength * math.cos(theta),
        Omega_u=sp.drive_strength * math.sin(theta),
        sigma_z=sigma_z, frame=frame)


def polariton_decays(kappa_c: float, kappa_a: float, theta: float):
    """Forward map (kappa_c, kappa_a) -> (kappa_l, kappa_u)."""
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    return kappa_c * c2 + kappa_a * s2, kappa_c * s2 + kappa_a * c2


def invert_decays(kappa_l: float, kappa_u: float, theta: float, min_gap: float = 1e-3):
    """Recover (kappa_c, kappa_a) from the polariton decay rates."""
    if abs(theta - math.pi / 4) < min_gap:
        raise ValueError("inversion ill-conditioned: theta too close to pi/4")
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    c2t = math.cos(2 * theta)
    kappa_c = (-s2 * kappa_u + c2 * kappa_l) / c2t
    kappa_a = (c2 * kappa_u - s2 * kappa_l) / c2t
    return kappa_c, kappa_a


def ancilla_from_polaritons(omega_l: float, omega_u: float, omega_c: float) -> float:
    """Sum rule: omega_a = omega_l + omega_u - omega_c."""
    return omega_l + omega_u - omega_c


def effective_hamiltonian(sp: SystemParams, dims=(2, 4, 4), frame: str = "ground") -> Operator:
    """Diagonal qubit-polariton Hamiltonian (GHz) on (qubit, lower, upper).

    Block form ``sum_s |s><s| (s omega_q'/2 + sum_j omega_j_bar(s) n_j)``;
    in the ground frame this is ``(omega_q'/2) sz + sum_j omega_j n_j + sz sum_j chi_j n_j``.
    """
    dq, dl, du = (int(d) for d in dims)
    if dq != 2:
        raise ValueError("qubit must be a two-level mode")
    space = HilbertSpace.from_dims(qubit=2, lower=dl, upper=du)
    nl = np.kron(np.diag(np.arange(dl)), np.eye(du))
    nu = np.kron(np.eye(dl), np.diag(np.arange(du)))
    H = np.zeros((space.total_dim,) * 2)
    for k, s in enumerate((-1, 1)):
        pp = polariton_params(sp, s, frame)
        block = s * sp.omega_q_prime / 2 * np.eye(dl * du) + pp.omega_l_bar * nl + pp.omega_u_bar * nu
        proj = np.zeros((2, 2))
        proj[k, k] = 1
        H = H + np.kron(proj, block)
    return Operator(space, H)
