"""Spectroscopy: frequency sweeps, Lorentzian fits, flux maps and cross-Kerr shifts."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from .circuit import CircuitParams, full_spectrum_summary
from .dynamics import transmission_amplitude
from .polariton import SystemParams, polariton_decays


@dataclass
class SpectroscopyCurve:
    grid: np.ndarray  # drive frequency, GHz
    samples: np.ndarray  # complex amplitude or magnitude
    sigma_z: float | None = None
    flux: float | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.samples = np.asarray(self.samples)
        if self.grid.shape != self.samples.shape:
            raise ValueError("grid and samples differ in shape")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite samples")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.samples)


@dataclass
class PeakFit:
    center: float  # GHz
    width: float  # FWHM of the power line, MHz
    weight: complex
    residual: float
    center_err: float = float("nan")  # GHz
    width_err: float = float("nan")  # MHz
    diagnostics: dict = field(default_factory=dict)


def sweep_frequency(sp: SystemParams, grid, sigma_z: float = -1, frame: str = "ground",
                    flux: float | None = None) -> SpectroscopyCurve:
    """Transmission amplitude on a drive-frequency grid (GHz)."""
    grid = np.asarray(grid, dtype=float)
    return SpectroscopyCurve(grid, transmission_amplitude(sp, grid, sigma_z, frame), sigma_z, flux)


def _pick_peaks(x, mag):
    idx, _ = find_peaks(mag, prominence=0.05 * mag.max())
    if idx.size < 2:
        raise ValueError("fewer than two resolvable maxima")
    idx = np.sort(idx[np.argsort(mag[idx])[-2:]])
    widths = []
    for i in idx:
        level = mag[i] / math.sqrt(2)
        left = i
        while left > 0 and mag[left] > level:
            left -= 1
        right = i
        while right < mag.size - 1 and mag[right] > level:
            right += 1
        hw = [x[i] - x[left] if mag[left] <= level else np.inf,
              x[right] - x[i] if mag[right] <= level else np.inf]
        w = min(hw) * 2 if np.isfinite(min(hw)) else (x[-1] - x[0]) / 10
        widths.append(max(w, 2 * (x[1] - x[0])))
    return idx, np.array(widths)


def _lorentz_pair(x, centers, widths, weights):
    return sum(w / (k / 2 - 1j * (x - c)) for c, k, w in zip(centers, widths, weights))


def fit_two_lorentzians(curve: SpectroscopyCurve, mode: str = "magnitude",
                        max_iter: int = 200, ftol: float = 1e-10):
    """Least-squares fit of two Lorentzian lines, returned sorted by centre.

    ``mode="magnitude"`` fits |A| with real positive weights,
    ``mode="complex"`` fits the complex amplitude with complex weights.
    Initial centres come from the two highest local maxima and widths
    from the half-power crossings.
    """
    if mode not in ("magnitude", "complex"):
        raise ValueError("mode must be 'magnitude' or 'complex'")
    if mode == "complex" and not np.iscomplexobj(curve.samples):
        raise ValueError("complex fit needs complex samples")
    x0 = curve.grid[0]
    x = (curve.grid - x0) * 1e3  # MHz
    mag = curve.magnitude
    idx, widths = _pick_peaks(x, mag)
    sep = abs(x[idx[1]] - x[idx[0]])
    if sep <= (widths[0] + widths[1]) / 4:
        raise ValueError("peaks not resolvable")
    scale = float(mag.max())
    y = curve.samples / scale

    if mode == "magnitude":
        a0 = [mag[i] / scale * w / 2 for i, w in zip(idx, widths)]
        p0 = np.array([x[idx[0]], x[idx[1]], widths[0], widths[1], a0[0], a0[1]])

        def resid(p):
            return np.abs(_lorentz_pair(x, p[:2], np.abs(p[2:4]), p[4:6])) - np.abs(y)
    else:
        a0 = [y[i] * w / 2 for i, w in zip(idx, widths)]
        p0 = np.array([x[idx[0]], x[idx[1]], widths[0], widths[1],
                       a0[0].real, a0[0].imag, a0[1].real, a0[1].imag])

        def resid(p):
            m = _lorentz_pair(x, p[:2], np.abs(p[2:4]), [p[4] + 1j * p[5], p[6] + 1j * p[7]])
            d = m - y
            return np.concatenate([d.real, d.imag])

    res = least_squares(resid, p0, method="lm", ftol=ftol, xtol=ftol, gtol=ftol,
                        max_nfev=max_iter * (p0.size + 1))
    if res.status <= 0:
        raise RuntimeError(f"Lorentzian fit did not converge: {res.message}")
    p = res.x
    m, n = res.fun.size, p.size
    dof = max(m - n, 1)
    s2 = 2 * res.cost / dof
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * s2
        err = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        cov, err = None, np.full(n, np.nan)
    rnorm = float(np.linalg.norm(res.fun) * scale)
    fits = []
    for j in range(2):
        if mode == "magnitude":
            wgt = complex(p[4 + j] * scale)
        else:
            wgt = complex((p[4 + 2 * j] + 1j * p[5 + 2 * j]) * scale)
        fits.append(PeakFit(center=x0 + p[j] * 1e-3, width=abs(p[2 + j]), weight=wgt,
                            residual=rnorm, center_err=err[j] * 1e-3, width_err=err[2 + j],
                            diagnostics={"nfev": int(res.nfev), "status": int(res.status),
                                         "cost": float(res.cost)}))
    fits.sort(key=lambda f: f.center)
    return fits[0], fits[1]


@dataclass
class ShiftResult:
    shift_l: float  # 2 chi_l, GHz
    shift_u: float  # 2 chi_u, GHz
    err_l: float
    err_u: float
    fits_g: tuple
    fits_e: tuple

    @property
    def total(self) -> float:
        return self.shift_l + self.shift_u

    @property
    def total_err(self) -> float:
        return math.hypot(self.err_l, self.err_u)


def conditional_shift(curve_g: SpectroscopyCurve, curve_e: SpectroscopyCurve,
                      mode: str = "magnitude") -> ShiftResult:
    """Per-polariton centre difference (e minus g) from two fitted curves."""
    fg = fit_two_lorentzians(curve_g, mode)
    fe = fit_two_lorentzians(curve_e, mode)
    dl = fe[0].center - fg[0].center
    du = fe[1].center - fg[1].center
    el = math.hypot(fe[0].center_err, fg[0].center_err)
    eu = math.hypot(fe[1].center_err, fg[1].center_err)
    return ShiftResult(dl, du, el, eu, fg, fe)


# ----------------------------------------------------------------- flux map

@dataclass
class FluxMap:
    tracks: dict  # name -> array over sorted flux
    curves_g: list
    curves_e: list


def flux_map(cp: CircuitParams, flux_list: Sequence[float], grid, kappa_c: float,
             kappa_a, drive_strength: float = 0.1, dims=(6, 8, 8)) -> FluxMap:
    """Polariton peak tracks and lineshapes versus flux.

    Peak frequencies come from the full circuit diagonalisation; the
    mixing angle follows from the sum rule and the lineshapes use the
    polariton decay formulas. ``kappa_a`` is a number or a mapping from
    flux to ancilla decay (MHz).
    """
    fluxes = np.sort(np.asarray(flux_list, dtype=float))
    grid = np.asarray(grid, dtype=float)
    cols = {k: [] for k in ("flux", "omega_l", "omega_u", "omega_l_e", "omega_u_e", "omega_a_bar",
                            "theta", "kappa_l", "kappa_u", "shift_l", "shift_u", "omega_q")}
    curves_g, curves_e = [], []
    for f in fluxes:
        s = full_spectrum_summary(cp, f, dims)
        wl, wu = s["omega_l_g"], s["omega_u_g"]
        wa = wl + wu - cp.omega_c
        cos2t = np.clip((wa - cp.omega_c) / (wu - wl), -1, 1)
        theta = 0.5 * math.acos(cos2t)
        ka = kappa_a[float(f)] if hasattr(kappa_a, "__getitem__") else float(kappa_a)
        kl, ku = polariton_decays(kappa_c, ka, theta)
        for name, val in (("flux", f), ("omega_l", wl), ("omega_u", wu), ("omega_l_e", s["omega_l_e"]),
                          ("omega_u_e", s["omega_u_e"]), ("omega_a_bar", wa), ("theta", theta),
                          ("kappa_l", kl), ("kappa_u", ku), ("shift_l", s["shift_l"]),
                          ("shift_u", s["shift_u"]), ("omega_q", s["omega_q"])):
            cols[name].append(float(val))
        s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
        for centers, store in (((wl, wu), curves_g), ((s["omega_l_e"], s["omega_u_e"]), curves_e)):
            amp = (-1j * drive_strength * c2 / (kl / 2 - 1j * (grid - centers[0]) * 1e3)
                   - 1j * drive_strength * s2 / (ku / 2 - 1j * (grid - centers[1]) * 1e3))
            store.append(SpectroscopyCurve(grid, amp, -1 if store is curves_g else 1, float(f)))
    return FluxMap({k: np.array(v) for k, v in cols.items()}, curves_g, curves_e)


@dataclass
class CrossingFit:
    g_ac: float
    omega_c: float
    omega_a_bar: np.ndarray
    residual: float


def _crossing_branches(omega_c, g, omega_a):
    mid = 0.5 * (omega_c + omega_a)
    r = np.sqrt(0.25 * (omega_a - omega_c) ** 2 + g * g)
    return mid - r, mid + r


def extract_avoided_crossing(omega_l, omega_u) -> CrossingFit:
    """Fit the two-level avoided-crossing model to lower/upper tracks (GHz).

    Uses ``omega_l omega_u = omega_c (S - omega_c) - g^2`` with
    ``S = omega_l + omega_u`` (linear in omega_c and omega_c^2 + g^2) to
    initialise, then refines on both tracks jointly.
    """
    wl = np.asarray(omega_l, dtype=float)
    wu = np.asarray(omega_u, dtype=float)
    S, P = wl + wu, wl * wu
    A = np.column_stack([S, -np.ones_like(S)])
    (wc0, K), *_ = np.linalg.lstsq(A, P, rcond=None)
    g0 = math.sqrt(max(K - wc0**2, 1e-12))
    det = (S - wc0) - wc0
    if not (det.min() < 0 < det.max()):
        raise ValueError("tracks do not bracket the crossing")

    def resid(p):
        wc, g = p
        lo, hi = _crossing_branches(wc, g, S - wc)
        return np.concatenate([lo - wl, hi - wu])

    res = least_squares(resid, [wc0, g0], method="lm", xtol=1e-14, ftol=1e-14)
    wc, g = res.x
    return CrossingFit(abs(float(g)), float(wc), S - wc, float(np.linalg.norm(res.fun)))


# ----------------------------------------------------------------- CSV

def write_curves_csv(path, curves: Sequence[SpectroscopyCurve]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["flux", "sigma_z", "omega_d_GHz", "magnitude", "re", "im"])
        for c in curves:
            for x, s in zip(c.grid, c.samples):
                s = complex(s)
                w.writerow([_fmt(c.flux), _fmt(c.sigma_z), f"{x:.9f}", f"{abs(s):.12e}",
                            f"{s.real:.12e}", f"{s.imag:.12e}"])


def read_curves_csv(path) -> list:
    """Read curves written by :func:`write_curves_csv` (or flux, omega_d, magnitude)."""
    rows = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            key = (r.get("flux", ""), r.get("sigma_z", ""))
            x = float(r.get("omega_d_GHz") or r.get("omega_d"))
            if "re" in r and r["re"] not in (None, ""):
                val = complex(float(r["re"]), float(r["im"]))
            else:
                val = float(r["magnitude"])
            rows.setdefault(key, []).append((x, val))
    out = []
    for (f, s), pts in rows.items():
        pts.sort(key=lambda t: t[0])
        out.append(SpectroscopyCurve([p[0] for p in pts], [p[1] for p in pts],
                                     float(s) if s else None, float(f) if f else None))
    return out


def write_tracks_csv(path, fmap: FluxMap) -> None:
    t = fmap.tracks
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["flux", "branch", "qubit", "center_GHz", "width_MHz", "weight"])
        for i, f in enumerate(t["flux"]):
            th = t["theta"][i]
            for br, wkey, ekey, kkey, wt in (("lower", "omega_l", "omega_l_e", "kappa_l", math.cos(th) ** 2),
                                             ("upper", "omega_u", "omega_u_e", "kappa_u", math.sin(th) ** 2)):
                for q, key in (("g", wkey), ("e", ekey)):
                    w.writerow([_fmt(f), br, q, f"{t[key][i]:.9f}", f"{t[kkey][i]:.6f}", f"{wt:.6f}"])


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))
