"""Transmon-molecule circuit: parameter chain, Hamiltonians and labelled spectra.

Energies are in GHz (E/h), capacitances in fF, inductances in nH. The
flux is given in units of the flux quantum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import constants as sc

from .qops import (HilbertSpace, Operator, destroy, eig_hermitian, matrix_function,
                   phase_number_local)

E_CHARGE = sc.e
PLANCK = sc.h
PHI0_REDUCED = sc.hbar / (2 * sc.e)  # reduced flux quantum, Wb

MIN_REGIME_RATIO = 20.0


def charging_energy(C_fF: float) -> float:
    """e^2 / 2C in GHz for a capacitance in fF."""
    return E_CHARGE**2 / (2 * C_fF * 1e-15) / PLANCK / 1e9


def josephson_inductance(E_J: float) -> float:
    """L_J = phi0^2 / E_J in nH for E_J in GHz."""
    return PHI0_REDUCED**2 / (E_J * 1e9 * PLANCK) * 1e9


@dataclass(frozen=True)
class CircuitParams:
    """Circuit constants of the transmon molecule coupled to a cavity.

    Parameters
    ----------
    E_J : float
        Mean junction energy, GHz.
    d_J : float
        Junction asymmetry (E_J1 - E_J2) / (E_J1 + E_J2).
    C_S, C_t : float
        Shunt and coupling capacitances, fF.
    L_a_of_n : mapping
        Integer flux index -> coupling inductance in nH.
    flux : float
        Applied flux in flux quanta.
    omega_c, g_ac, g_qc : float
        Bare cavity frequency and couplings, GHz.
    L_J : float, optional
        Josephson inductance override in nH. Derived from E_J when None.
    """

    E_J: float
    d_J: float
    C_S: float
    C_t: float
    L_a_of_n: Mapping = field(default_factory=dict)
    flux: float = 0.0
    omega_c: float = 7.169
    g_ac: float = 0.295
    g_qc: float = 0.0
    L_J: float | None = None

    def __post_init__(self):
        if self.E_J <= 0:
            raise ValueError("E_J must be positive")
        if abs(self.d_J) >= 1:
            raise ValueError("|d_J| must be < 1")
        if self.C_S <= 0 or self.C_t <= 0:
            raise ValueError("capacitances must be positive")
        table = {int(k): float(v) for k, v in dict(self.L_a_of_n).items()}
        if any(v <= 0 for v in table.values()):
            raise ValueError("inductances must be positive")
        object.__setattr__(self, "L_a_of_n", table)
        if self.L_J is not None and self.L_J <= 0:
            raise ValueError("L_J must be positive")

    @property
    def L_J_nH(self) -> float:
        return josephson_inductance(self.E_J) if self.L_J is None else float(self.L_J)

    @property
    def E_Cq(self) -> float:
        return charging_energy(2 * self.C_S)

    @property
    def E_Ca(self) -> float:
        return charging_energy(2 * (self.C_S + 2 * self.C_t))

    def coupling_inductance(self, flux: float | None = None):
        """Return ``(L_a, interpolated)`` at ``flux``.

        Integer flux reads the table; otherwise entries are linearly
        interpolated and the flag is set.
        """
        f = self.flux if flux is None else float(flux)
        n = round(f)
        if abs(f - n) < 1e-12:
            if n not in self.L_a_of_n:
                raise KeyError(f"no L_a entry for flux index {n}")
            return self.L_a_of_n[n], False
        lo, hi = math.floor(f), math.ceil(f)
        for k in (lo, hi):
            if k not in self.L_a_of_n:
                raise KeyError(f"no L_a entry for flux index {k}")
        w = f - lo
        return (1 - w) * self.L_a_of_n[lo] + w * self.L_a_of_n[hi], True

    def with_flux(self, flux: float) -> "CircuitParams":
        return replace(self, flux=float(flux))


def squid_chain_table(L_a0: float, period: float, n_max: int) -> dict:
    """L_a(n) = L_a0 / cos(pi n / period) for n = 0..n_max."""
    return {n: L_a0 / math.cos(math.pi * n / period) for n in range(n_max + 1)}


@dataclass(frozen=True)
class DerivedParams:
    """Quantum-optics parameters of the molecule, all in GHz."""

    E_Cq: float
    E_Ca: float
    omega_q_harm: float
    omega_a_harm: float
    omega_q: float
    omega_a: float
    alpha_q: float
    U_a: float
    g_zz: float
    omega_q_prime: float
    omega_a_prime: float
    inductance_ratio: float  # 1 + 2 L_J / L_a
    L_a: float
    L_J: float
    interpolated: bool = False

    @property
    def omega_a_bar(self) -> float:
        """Ancilla frequency with the qubit in its ground state."""
        return self.omega_a_prime + self.g_zz

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["omega_a_bar"] = self.omega_a_bar
        return d


def derive_params(cp: CircuitParams, n: float | None = None) -> DerivedParams:
    """Run the circuit -> quantum-optics parameter chain at flux index ``n``."""
    L_a, interp = cp.coupling_inductance(n)
    E_Cq, E_Ca = cp.E_Cq, cp.E_Ca
    for name, ec in (("E_Cq", E_Cq), ("E_Ca", E_Ca)):
        if cp.E_J / ec <= MIN_REGIME_RATIO:
            raise ValueError(f"not in the transmon regime: E_J/{name} = {cp.E_J / ec:.1f}")
    L_J = cp.L_J_nH
    ratio = 1 + 2 * L_J / L_a
    E_Jq = 2 * cp.E_J
    E_Ja = 2 * cp.E_J * ratio
    wq_h = math.sqrt(8 * E_Jq * E_Cq)
    wa_h = math.sqrt(8 * E_Ja * E_Ca)
    alpha_q = -E_Cq
    U_a = -E_Ca / ratio
    g_zz = math.sqrt(alpha_q * U_a)
    wq = wq_h + alpha_q
    wa = wa_h + U_a
    return DerivedParams(E_Cq=E_Cq, E_Ca=E_Ca, omega_q_harm=wq_h, omega_a_harm=wa_h,
                         omega_q=wq, omega_a=wa, alpha_q=alpha_q, U_a=U_a, g_zz=g_zz,
                         omega_q_prime=wq - g_zz, omega_a_prime=wa - 2 * g_zz,
                         inductance_ratio=ratio, L_a=L_a, L_J=L_J, interpolated=interp)


def _transmon_locals(dim: int, E_C: float, E_J_eff: float, pad: int):
    """phi, phi^2, n^2, cos phi, sin phi on a padded basis, projected to ``dim``."""
    big = dim + pad
    phi, n = phase_number_local(big, E_C, E_J_eff)
    phi = phi.real
    n2 = (n @ n).real
    s = slice(0, dim)
    return {
        "phi": phi[s, s],
        "phi2": (phi @ phi)[s, s],
        "n2": n2[s, s],
        "cos": matrix_function(phi, np.cos)[s, s],
        "sin": matrix_function(phi, np.sin)[s, s],
    }


def _kron3(x, y, z):
    return np.kron(np.kron(x, y), z)


def build_full_hamiltonian(cp: CircuitParams, flux: float | None = None,
                           dims: Sequence[int] = (6, 8, 8), pad: int = 40) -> Operator:
    """Full circuit Hamiltonian H/h in GHz on the (qubit, ancilla, cavity) space.

    Both phases are shifted by pi*round(flux), which leaves the junction
    terms unchanged, so only the residual flux displaces the ancilla
    quadratic term.
    """
    dq, da, dc = (int(d) for d in dims)
    if min(dq, da, dc) < 4:
        raise ValueError("each mode needs at least 4 levels")
    f = cp.flux if flux is None else float(flux)
    L_a, _ = cp.coupling_inductance(f)
    L_J = cp.L_J_nH
    delta = f - round(f)
    E_Cq, E_Ca = cp.E_Cq, cp.E_Ca
    ratio = 1 + 2 * L_J / L_a
    q = _transmon_locals(dq, E_Cq, 2 * cp.E_J, pad)
    a = _transmon_locals(da, E_Ca, 2 * cp.E_J * ratio, pad)
    Iq, Ia, Ic = np.eye(dq), np.eye(da), np.eye(dc)

    disp = a["phi2"] - 2 * math.pi * delta * a["phi"] + (math.pi * delta) ** 2 * Ia
    H = 4 * E_Cq * _kron3(q["n2"], Ia, Ic) + 4 * E_Ca * _kron3(Iq, a["n2"], Ic)
    H -= 2 * cp.E_J * _kron3(q["cos"], a["cos"], Ic)
    H += 2 * cp.E_J * (L_J / L_a) * _kron3(Iq, disp, Ic)
    if cp.d_J != 0:
        H -= 2 * cp.E_J * cp.d_J * _kron3(q["sin"], a["sin"], Ic)

    c = destroy(dc).real
    aa = destroy(da).real
    qq = destroy(dq).real
    H += cp.omega_c * _kron3(Iq, Ia, c.T @ c)
    H += cp.g_ac * (_kron3(Iq, aa.T, c) + _kron3(Iq, aa, c.T))
    if cp.g_qc != 0:
        H += cp.g_qc * _kron3(qq + qq.T, Ia, c + c.T)
    space = HilbertSpace.from_dims(qubit=dq, ancilla=da, cavity=dc)
    return Operator(space, H)


def build_molecule_hamiltonian(dp: DerivedParams, dims: Sequence[int] = (6, 8)) -> Operator:
    """Quartic two-mode model of the molecule on the (qubit, ancilla) space.

    ``w_q x_q^dag x_q + w_a x_a^dag x_a + (alpha_q/12) X_q^4 + (U_a/12) X_a^4
    - (g_zz/2) X_q^2 X_a^2`` with ``X = x + x^dag`` and harmonic frequencies.
    """
    dq, da = (int(d) for d in dims)
    q, a = destroy(dq).real, destroy(da).real
    Xq, Xa = q + q.T, a + a.T
    Iq, Ia = np.eye(dq), np.eye(da)
    H = dp.omega_q_harm * np.kron(q.T @ q, Ia) + dp.omega_a_harm * np.kron(Iq, a.T @ a)
    H += dp.alpha_q / 12 * np.kron(np.linalg.matrix_power(Xq, 4), Ia)
    H += dp.U_a / 12 * np.kron(Iq, np.linalg.matrix_power(Xa, 4))
    H -= dp.g_zz / 2 * np.kron(Xq @ Xq, Xa @ Xa)
    return Operator(HilbertSpace.from_dims(qubit=dq, ancilla=da), H)


def add_cavity(H_qa: Operator, omega_c: float, g_ac: float, dim_c: int = 8,
               g_qc: float = 0.0) -> Operator:
    """Attach a cavity mode to a (qubit, ancilla) Hamiltonian."""
    dq, da = H_qa.space.dims
    c = destroy(dim_c).real
    a = destroy(da).real
    q = destroy(dq).real
    Iq, Ia, Ic = np.eye(dq), np.eye(da), np.eye(dim_c)
    H = np.kron(H_qa.matrix, Ic) + omega_c * _kron3(Iq, Ia, c.T @ c)
    H = H + g_ac * (_kron3(Iq, a.T, c) + _kron3(Iq, a, c.T))
    if g_qc:
        H = H + g_qc * _kron3(q + q.T, Ia, c + c.T)
    names = H_qa.space.names + ("cavity",)
    return Operator(HilbertSpace.from_dims(**dict(zip(names, (dq, da, dim_c)))), H)


@dataclass(frozen=True)
class Level:
    energy: float
    label: tuple
    overlap: float
    ambiguous: bool


@dataclass
class LabeledSpectrum:
    levels: list
    flux: float | None
    space: HilbertSpace
    vectors: np.ndarray | None = None

    def __post_init__(self):
        self._by_label = {lv.label: i for i, lv in enumerate(self.levels)}

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    def index(self, label) -> int:
        return self._by_label[tuple(label)]

    def energy(self, label) -> float:
        return self.levels[self.index(label)].energy

    def vector(self, label) -> np.ndarray:
        return self.vectors[:, self.index(label)]

    def polariton_pair(self, n_q: int = 0) -> np.ndarray:
        """Energies of the two eigenstates carrying one ancilla/cavity quantum.

        Picks the two eigenvectors with the largest weight on
        ``|n_q,1,0>`` and ``|n_q,0,1>``; robust through the resonance
        where the maximal-overlap labels swap.
        """
        if self.vectors is None:
            raise ValueError("spectrum was built without eigenvectors")
        sp = self.space
        i1 = sp.basis_index((n_q, 1, 0))
        i2 = sp.basis_index((n_q, 0, 1))
        w = np.abs(self.vectors[i1]) ** 2 + np.abs(self.vectors[i2]) ** 2
        idx = np.argsort(w)[-2:]
        return np.sort(self.energies[idx])


def label_spectrum(op: Operator, space: HilbertSpace | None = None, flux: float | None = None,
                   keep_vectors: bool = True) -> LabeledSpectrum:
    """Diagonalise and label eigenstates by their dominant bare product state.

    Greedy assignment in descending squared overlap; each bare label is
    used once. Ties are broken towards lower energy.
    """
    space = op.space if space is None else space
    w, v = eig_hermitian(op)
    ov = np.abs(v) ** 2  # ov[basis, eigenstate]
    n = len(w)
    order = np.lexsort((np.repeat(np.arange(n), n), -ov.T.ravel()))
    # flat index k -> (eigenstate, basis) over ov.T
    state_of = order // n
    basis_of = order % n
    label_for = np.full(n, -1)
    used = np.zeros(n, dtype=bool)
    left = n
    for s, b in zip(state_of, basis_of):
        if label_for[s] >= 0 or used[b]:
            continue
        label_for[s] = b
        used[b] = True
        left -= 1
        if left == 0:
            break
    labels = space.basis_labels()
    levels = []
    for s in range(n):
        b = label_for[s]
        o = float(ov[b, s])
        levels.append(Level(float(w[s]), tuple(int(x) for x in labels[b]), o,
                            bool(ov[:, s].max() < 0.5)))
    return LabeledSpectrum(levels, flux, space, v if keep_vectors else None)


def full_spectrum_summary(cp: CircuitParams, flux: float | None = None,
                          dims: Sequence[int] = (6, 8, 8), pad: int = 40) -> dict:
    """Labelled transition frequencies of the full circuit (GHz).

    Returns qubit frequency and anharmonicity, the two polariton
    frequencies for the qubit in g and in e, and the conditional shifts.
    """
    f = cp.flux if flux is None else float(flux)
    spec = label_spectrum(build_full_hamiltonian(cp, f, dims, pad), flux=f)
    Eg = spec.energy((0, 0, 0))
    Ee = spec.energy((1, 0, 0))
    Ef = spec.energy((2, 0, 0))
    pol_g = spec.polariton_pair(0) - Eg
    pol_e = spec.polariton_pair(1) - Ee
    return {
        "flux": f,
        "omega_q": float(Ee - Eg),
        "alpha_q": float(Ef - 2 * Ee + Eg),
        "omega_l_g": float(pol_g[0]), "omega_u_g": float(pol_g[1]),
        "omega_l_e": float(pol_e[0]), "omega_u_e": float(pol_e[1]),
        "shift_l": float(pol_e[0] - pol_g[0]),
        "shift_u": float(pol_e[1] - pol_g[1]),
    }


def convergence_drift(cp: CircuitParams, flux: float | None = None,
                      dims: Sequence[int] = (6, 8, 8), larger: Sequence[int] | None = None,
                      pad: int = 40) -> dict:
    """Change (GHz) of each reported transition frequency between two truncations."""
    if larger is None:
        larger = tuple(2 * d for d in dims)
    a = full_spectrum_summary(cp, flux, dims, pad)
    b = full_spectrum_summary(cp, flux, larger, pad)
    return {k: abs(a[k] - b[k]) for k in a if k != "flux"}
