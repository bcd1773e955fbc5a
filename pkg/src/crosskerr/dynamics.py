"""Driven-dissipative dynamics, steady states, transmission and record synthesis.

Hamiltonians are stored in GHz (linear frequency) in the frame rotating
at the drive. Lindblad rates in :class:`LindbladModel` are plain rates in
1/ns. Times are in ns.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import svd
from scipy.signal import lfilter

from . import qops
from .polariton import SystemParams, polariton_params
from .qops import HilbertSpace, Operator, QuantumState, destroy, embed

TWO_PI = 2 * math.pi


def mhz_to_rate(kappa_mhz: float) -> float:
    """kappa/2pi in MHz -> angular rate in 1/ns."""
    return TWO_PI * kappa_mhz * 1e-3


@dataclass
class LindbladModel:
    """Hamiltonian (GHz, rotating frame) plus jump operators with rates in 1/ns."""

    H: Operator
    jumps: list = field(default_factory=list)
    drive_freq: float | None = None
    field_op: Operator | None = None  # operator whose mean is the output field

    def __post_init__(self):
        for _, r in self.jumps:
            if r < 0:
                raise ValueError("rates must be non-negative")
        if not self.H.is_hermitian():
            raise ValueError("Hamiltonian is not hermitian")

    @property
    def space(self) -> HilbertSpace:
        return self.H.space

    def liouvillian(self) -> np.ndarray:
        return qops.liouvillian(TWO_PI * self.H.matrix, self.jumps)


class IntegrationError(RuntimeError):
    pass


def evolve(model: LindbladModel, rho0, t_grid: Sequence[float], rtol: float = 1e-10,
           atol: float = 1e-12) -> list:
    """Integrate the master equation and return the states on ``t_grid`` (ns)."""
    rho0 = rho0.dm() if isinstance(rho0, QuantumState) else np.asarray(rho0, dtype=complex)
    qops.check_density_matrix(rho0)
    d = rho0.shape[0]
    if d != model.space.total_dim:
        raise ValueError("initial state does not match the model space")
    L = model.liouvillian()
    t = np.asarray(t_grid, dtype=float)
    sol = solve_ivp(lambda _, y: L @ y, (t[0], t[-1]), qops.vec(rho0), method="DOP853",
                    t_eval=t, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else t[0]} ns: "
                               f"{sol.message}")
    out = []
    for k in range(sol.y.shape[1]):
        rho = qops.unvec(sol.y[:, k], d)
        qops.check_density_matrix(rho)
        rho = 0.5 * (rho + rho.conj().T)
        out.append(QuantumState("dm", rho / np.trace(rho).real, model.space))
    return out


def steady_state(model: LindbladModel, gap_tol: float = 1e-10) -> QuantumState:
    """Unique null vector of the Liouvillian as a density matrix."""
    L = model.liouvillian()
    d = model.space.total_dim
    _, s, vh = svd(L)
    scale = max(s[0], 1.0)
    if s[-2] / scale <= gap_tol:
        raise ValueError(f"steady state not unique (second smallest singular value {s[-2]:.3g})")
    rho = qops.unvec(vh[-1].conj(), d)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    resid = np.linalg.norm(L @ qops.vec(rho))
    if resid > 1e-10 * scale:
        raise ValueError(f"steady-state residual too large ({resid:.3g})")
    return QuantumState("dm", rho, model.space)


def _drive_freq(sp: SystemParams, drive_freq):
    if drive_freq is not None:
        return float(drive_freq)
    if sp.drive_freq is None:
        raise ValueError("no drive frequency given")
    return float(sp.drive_freq)


def polariton_branch_model(sp: SystemParams, sigma_z: float, dims=(4, 4),
                           drive_freq: float | None = None, frame: str = "ground") -> LindbladModel:
    """Two driven damped polaritons for a fixed qubit state."""
    wd = _drive_freq(sp, drive_freq)
    pp = polariton_params(sp, sigma_z, frame)
    space = HilbertSpace.from_dims(lower=dims[0], upper=dims[1])
    cl = qops.ladder(space, "lower")
    cu = qops.ladder(space, "upper")
    H = (pp.omega_l_bar - wd) * (cl.dag() @ cl) + (pp.omega_u_bar - wd) * (cu.dag() @ cu)
    H = H + 1e-3 * pp.Omega_l * (cl + cl.dag()) + 1e-3 * pp.Omega_u * (cu + cu.dag())
    jumps = [(cl, mhz_to_rate(pp.kappa_l)), (cu, mhz_to_rate(pp.kappa_u))]
    field_op = math.cos(pp.theta) * cl + math.sin(pp.theta) * cu
    return LindbladModel(H, jumps, wd, field_op)


def bare_branch_model(sp: SystemParams, sigma_z: float, dims=(4, 4),
                      drive_freq: float | None = None) -> LindbladModel:
    """Ancilla and cavity in their own basis for a fixed qubit state; drive on the cavity."""
    wd = _drive_freq(sp, drive_freq)
    space = HilbertSpace.from_dims(ancilla=dims[0], cavity=dims[1])
    a = qops.ladder(space, "ancilla")
    c = qops.ladder(space, "cavity")
    wa = sp.omega_a_prime - sp.g_zz * sigma_z
    H = (wa - wd) * (a.dag() @ a) + (sp.omega_c - wd) * (c.dag() @ c)
    H = H + sp.g_ac * (a.dag() @ c + c.dag() @ a) + 1e-3 * sp.drive_strength * (c + c.dag())
    jumps = [(c, mhz_to_rate(sp.kappa_c)), (a, mhz_to_rate(sp.kappa_a))]
    return LindbladModel(H, jumps, wd, c)


def qubit_polariton_model(sp: SystemParams, dims=(2, 3, 3), drive_freq: float | None = None,
                          frame: str = "ground") -> LindbladModel:
    """Joint qubit + two-polariton model in the qubit and drive rotating frames.

    Includes qubit relaxation 1/T1 and dephasing 2 gamma_q D[sigma+ sigma-].
    """
    wd = _drive_freq(sp, drive_freq)
    dq, dl, du = dims
    if dq != 2:
        raise ValueError("qubit must be a two-level mode")
    if dq * dl * du > 64:
        raise ValueError("joint model limited to total dimension 64")
    space = HilbertSpace.from_dims(qubit=2, lower=dl, upper=du)
    cl = qops.ladder(space, "lower")
    cu = qops.ladder(space, "upper")
    sm = qops.ladder(space, "qubit")
    nl = cl.dag() @ cl
    nu = cu.dag() @ cu
    H = Operator(space, np.zeros((space.total_dim,) * 2))
    jumps = []
    field_op = Operator(space, np.zeros((space.total_dim,) * 2))
    for k, s in enumerate((-1, 1)):
        pp = polariton_params(sp, s, frame)
        proj = np.zeros((2, 2))
        proj[k, k] = 1
        P = embed(space, "qubit", proj)
        drive = 1e-3 * (pp.Omega_l * (cl + cl.dag()) + pp.Omega_u * (cu + cu.dag()))
        H = H + P @ ((pp.omega_l_bar - wd) * nl + (pp.omega_u_bar - wd) * nu + drive)
        field_op = field_op + P @ (math.cos(pp.theta) * cl + math.sin(pp.theta) * cu)
    pg = polariton_params(sp, -1, frame)
    jumps += [(cl, mhz_to_rate(pg.kappa_l)), (cu, mhz_to_rate(pg.kappa_u))]
    jumps.append((sm, sp.kappa_q * 1e-3))
    jumps.append((sm.dag() @ sm, 2 * sp.gamma_q * 1e-3))
    return LindbladModel(H, jumps, wd, field_op)


def field_expectation(model: LindbladModel, state: QuantumState) -> complex:
    if model.field_op is None:
        raise ValueError("model has no output-field operator")
    return state.expect(model.field_op)


def transmission_amplitude(sp: SystemParams, drive_freq, sigma_z: float = -1,
                           frame: str = "ground"):
    """Steady-state output field of the weakly driven polaritons.

    ``-i Omega sin^2 / (kappa_u/2 - i (w_d - w_u)) - i Omega cos^2 / (kappa_l/2 - i (w_d - w_l))``
    with rates and detunings in MHz; accepts scalar or array ``drive_freq`` (GHz).
    """
    pp = polariton_params(sp, sigma_z, frame)
    if sp.drive_strength > 0.2 * min(pp.kappa_l, pp.kappa_u):
        warnings.warn("drive not weak compared with the polariton linewidths", stacklevel=2)
    wd = np.asarray(drive_freq, dtype=float)
    du = (wd - pp.omega_u_bar) * 1e3
    dl = (wd - pp.omega_l_bar) * 1e3
    s2, c2 = math.sin(pp.theta) ** 2, math.cos(pp.theta) ** 2
    om = sp.drive_strength
    amp = -1j * om * s2 / (pp.kappa_u / 2 - 1j * du) - 1j * om * c2 / (pp.kappa_l / 2 - 1j * dl)
    return amp if np.ndim(amp) else complex(amp)


def level_amplitude(sp: SystemParams, level: int, drive_freq: float) -> complex:
    """Output field with the transmon in level 0, 1, 2 (lines shifted by 2 k chi_j)."""
    g = polariton_params(sp, -1, "ground")
    ref = polariton_params(sp, -1 if level == 0 else 1, "ground")
    s2, c2 = math.sin(ref.theta) ** 2, math.cos(ref.theta) ** 2
    wl = g.omega_l_bar + 2 * level * g.chi_l
    wu = g.omega_u_bar + 2 * level * g.chi_u
    om = sp.drive_strength
    return (-1j * om * s2 / (ref.kappa_u / 2 - 1j * (drive_freq - wu) * 1e3)
            - 1j * om * c2 / (ref.kappa_l / 2 - 1j * (drive_freq - wl) * 1e3))


def readout_drive_freq(sp: SystemParams) -> float:
    """Drive resonant with the lower polariton for the qubit in e."""
    g = polariton_params(sp, -1, "ground")
    return g.omega_l_bar + 2 * g.chi_l


# ----------------------------------------------------------------- records

@dataclass(frozen=True)
class ReadoutSpec:
    """Readout settings for record synthesis.

    n_photons is the steady-state lower-polariton occupation, window_ns
    the integration window that anchors the noise calibration.
    """

    n_photons: float = 2.0
    window_ns: float = 50.0
    dt_ns: float = 2.0
    drive_freq: float | None = None

    def __post_init__(self):
        if self.n_photons <= 0 or self.window_ns <= 0 or self.dt_ns <= 0:
            raise ValueError("readout settings must be positive")
        if self.window_ns < self.dt_ns:
            raise ValueError("integration window shorter than grid step")
        if self.n_photons > 5:
            warnings.warn("n_photons > 5: outside the linear-response regime", stacklevel=2)


@dataclass
class MeasurementRecord:
    times: np.ndarray
    I: np.ndarray
    prepared: str
    integration_window: float
    jump_times: list = field(default_factory=list)
    initial_level: int | None = None
    herald: np.ndarray | None = None


@dataclass
class RecordBatch:
    """A batch of records sharing one time grid (rows are records)."""

    times: np.ndarray
    I: np.ndarray
    prepared: str
    integration_window: float
    jump_times: list
    initial_level: np.ndarray
    herald_times: np.ndarray | None = None
    herald: np.ndarray | None = None
    targets: dict = field(default_factory=dict)

    def __len__(self):
        return self.I.shape[0]

    def __getitem__(self, k) -> MeasurementRecord:
        return MeasurementRecord(self.times, self.I[k], self.prepared, self.integration_window,
                                 list(self.jump_times[k]), int(self.initial_level[k]),
                                 None if self.herald is None else self.herald[k])

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def subset(self, mask) -> "RecordBatch":
        mask = np.asarray(mask)
        idx = np.flatnonzero(mask) if mask.dtype == bool else mask
        return RecordBatch(self.times, self.I[idx], self.prepared, self.integration_window,
                           [self.jump_times[i] for i in idx], self.initial_level[idx],
                           self.herald_times, None if self.herald is None else self.herald[idx],
                           self.targets)

    @property
    def has_jump(self) -> np.ndarray:
        return np.array([len(j) > 0 for j in self.jump_times])


def readout_quality(sp: SystemParams) -> float:
    """Q_r of the lower polariton from the ground-frame chi_l and kappa_l."""
    from .readout import quality_factor
    g = polariton_params(sp, -1, "ground")
    return quality_factor(abs(g.chi_l) * 1e3, g.kappa_l, sp.T1)


def record_targets(sp: SystemParams, readout: ReadoutSpec) -> dict:
    """Steady-state I levels per transmon level and the calibrated noise."""
    wd = readout.drive_freq if readout.drive_freq is not None else readout_drive_freq(sp)
    amps = np.array([level_amplitude(sp, k, wd) for k in range(3)])
    rot = np.exp(-1j * np.angle(amps[1] - amps[0]))
    levels = (amps * rot).real
    sep = levels[1] - levels[0]
    snr = sp.eta * readout.n_photons * readout_quality(sp)
    sigma_window = abs(sep) / math.sqrt(snr)
    n_win = readout.window_ns / readout.dt_ns
    g = polariton_params(sp, -1, "ground")
    return {"levels": levels, "drive_freq": wd, "snr": snr, "sigma_window": sigma_window,
            "sigma_sample": sigma_window * math.sqrt(n_win),
            "filter_rate": mhz_to_rate(g.kappa_l) / 2}


def _jump_path(rng, level: int, t0: float, t1: float, down: float, up: float):
    """Exact jump trajectory on [t0, t1): list of (time, new_level)."""
    out = []
    t = t0
    while True:
        rate = level * down + (up if level == 0 else 0.0)
        if rate <= 0:
            return level, out
        t += rng.exponential(1.0 / rate)
        if t >= t1:
            return level, out
        level = level + 1 if level == 0 and rng.random() < up / rate else level - 1
        out.append((t, level))


def _levels_on_grid(start_level: int, path, t0: float, times: np.ndarray) -> np.ndarray:
    lv = np.full(times.shape, start_level, dtype=int)
    for t, new in path:
        lv[times >= t] = new
    return lv


def simulate_records(sp: SystemParams, prepared: str, n_records: int, duration_ns: float,
                     readout: ReadoutSpec = ReadoutSpec(), thermal_pop: float = 0.0,
                     seed: int = 0, pi_error: float = 0.0, f_leak: float = 0.0,
                     herald: bool = False, herald_wait_ns: float = 300.0,
                     noise: bool = True, start: str = "empty") -> RecordBatch:
    """Synthesize integrated in-phase records for a prepared qubit state.

    The transmon follows a jump process (down rate k/T1 from level k,
    up rate thermal_pop/((1-thermal_pop) T1) from g). The signal relaxes
    towards the level-dependent steady state at rate kappa_l/2 and white
    Gaussian noise is added with a variance set by SNR = eta * n * Q_r
    over ``readout.window_ns``.

    Parameters
    ----------
    prepared : {"g", "e"}
    pi_error : float
        Probability that the pi pulse leaves the qubit unchanged.
    f_leak : float
        Probability that an e preparation ends in the second excited level.
    herald : bool
        Prepend a herald window of ``readout.window_ns`` followed by
        ``herald_wait_ns`` before the preparation.
    start : {"empty", "steady"}
        Initial signal: empty cavity or the steady state of the initial level.
    """
    if prepared not in ("g", "e"):
        raise ValueError("prepared must be 'g' or 'e'")
    for name, p in (("thermal_pop", thermal_pop), ("pi_error", pi_error), ("f_leak", f_leak)):
        if not 0 <= p < 1:
            raise ValueError(f"{name} must be in [0, 1)")
    if n_records < 1 or duration_ns < readout.dt_ns:
        raise ValueError("need at least one record and one sample")
    tg = record_targets(sp, readout)
    levels = tg["levels"]
    dt = readout.dt_ns
    n_t = int(round(duration_ns / dt))
    times = dt * (np.arange(n_t) + 1)
    T1_ns = sp.T1 * 1e3
    down = 0.0 if math.isinf(T1_ns) else 1.0 / T1_ns
    up = 0.0 if math.isinf(T1_ns) else thermal_pop / ((1 - thermal_pop) * T1_ns)
    a = math.exp(-tg["filter_rate"] * dt)
    sig = tg["sigma_sample"] if noise else 0.0

    n_h = int(round(readout.window_ns / dt)) if herald else 0
    h_times = dt * (np.arange(n_h) + 1) if herald else None
    t_prep = (readout.window_ns + herald_wait_ns) if herald else 0.0

    I = np.empty((n_records, n_t))
    H = np.empty((n_records, n_h)) if herald else None
    jumps, init = [], np.empty(n_records, dtype=int)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_records)
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        lvl = 1 if rng.random() < thermal_pop else 0
        if herald:
            end_lvl, path = _jump_path(rng, lvl, 0.0, t_prep, down, up)
            hl = _levels_on_grid(lvl, [p for p in path if p[0] < readout.window_ns], 0.0, h_times)
            H[r] = lfilter([1 - a], [1, -a], levels[hl]) + sig * rng.standard_normal(n_h)
            lvl = end_lvl
        if prepared == "e":
            if rng.random() >= pi_error:
                lvl = {0: 1, 1: 0, 2: 2}[lvl]
            if rng.random() < f_leak:
                lvl = 2
        init[r] = lvl
        _, path = _jump_path(rng, lvl, 0.0, duration_ns, down, up)
        jumps.append([p[0] for p in path])
        lv = _levels_on_grid(lvl, path, 0.0, times)
        target = levels[lv]
        zi = [a * levels[lvl]] if start == "steady" else [0.0]
        I[r], _ = lfilter([1 - a], [1, -a], target, zi=zi)
        if sig:
            I[r] += sig * rng.standard_normal(n_t)
    return RecordBatch(times, I, prepared, readout.window_ns, jumps, init, h_times, H, tg)


# ----------------------------------------------------------------- record I/O

RECORD_COLUMNS = ("record", "time_ns", "I", "prepared")


def write_records_csv(path, batch: RecordBatch) -> None:
    """One row per sample: record index, time (ns), I value, prepared label."""
    n, m = batch.I.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in range(n):
            for k in range(m):
                w.writerow([r, repr(float(batch.times[k])), repr(float(batch.I[r, k])), batch.prepared])


def read_records_csv(path, integration_window: float = 50.0) -> dict:
    """Load records written by :func:`write_records_csv` (or measured data).

    Returns a dict ``prepared label -> RecordBatch``. All records of one
    label must share the same time grid.
    """
    rows = {}
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS) - set(rd.fieldnames or ())
        if missing:
            raise ValueError(f"records CSV missing columns: {sorted(missing)}")
        for row in rd:
            rows.setdefault(row["prepared"], {}).setdefault(int(row["record"]), []).append(
                (float(row["time_ns"]), float(row["I"])))
    out = {}
    for label, recs in rows.items():
        keys = sorted(recs)
        first = np.array([t for t, _ in sorted(recs[keys[0]])])
        I = np.empty((len(keys), first.size))
        for i, k in enumerate(keys):
            s = sorted(recs[k])
            t = np.array([x for x, _ in s])
            if t.shape != first.shape or not np.allclose(t, first):
                raise ValueError(f"record {k} ('{label}') has a different time grid")
            I[i] = [v for _, v in s]
        out[label] = RecordBatch(first, I, label, integration_window, [[] for _ in keys],
                                 np.full(len(keys), -1))
    return out
