"""Single-shot readout analysis.

Matched filtering, histograms, double-Gaussian fits, threshold and
fidelity with an error budget, QND repeatability, quality factor and the
dispersive-coupling comparison.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import erfc

SQRT2 = math.sqrt(2.0)


def gaussian_tail(z):
    """P(X > z) for a standard normal."""
    return 0.5 * erfc(np.asarray(z) / SQRT2)


# ----------------------------------------------------------- filtering

def matched_weights(mean_g, mean_e) -> np.ndarray:
    """Weights proportional to |mean_e(t) - mean_g(t)|, normalised to unit sum."""
    mean_g = np.asarray(mean_g, dtype=float)
    mean_e = np.asarray(mean_e, dtype=float)
    if mean_g.shape != mean_e.shape:
        raise ValueError("mean traces must share one grid")
    w = np.abs(mean_e - mean_g)
    tot = w.sum()
    if tot <= 0:
        raise ValueError("identical mean traces: no separation to weight")
    return w / tot


def single_shot_values(records, weights) -> np.ndarray:
    """Weighted time integral of every record.

    ``records`` is a 2-D array (records x samples), a RecordBatch or an
    iterable of MeasurementRecord.
    """
    if hasattr(records, "I") and np.ndim(records.I) == 2:
        data = records.I
    elif isinstance(records, np.ndarray):
        data = np.atleast_2d(records)
    else:
        data = np.array([r.I for r in records])
    w = np.asarray(weights, dtype=float)
    if data.shape[1] != w.size:
        raise ValueError(f"weights length {w.size} != record length {data.shape[1]}")
    return data @ w


# ----------------------------------------------------------- histograms

@dataclass
class Histogram:
    edges: np.ndarray
    counts: dict  # label -> counts

    def __post_init__(self):
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("bin edges must increase")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def width(self) -> float:
        return float(np.mean(np.diff(self.edges)))

    def total(self, label) -> int:
        return int(self.counts[label].sum())


def build_histogram(values: dict, bins: int | None = None, min_bins: int = 60) -> Histogram:
    """Common-edge histogram of per-label values.

    Bin count from the Freedman-Diaconis rule on the pooled values with a
    floor of ``min_bins``.
    """
    pooled = np.concatenate([np.asarray(v, dtype=float) for v in values.values()])
    lo, hi = pooled.min(), pooled.max()
    if hi <= lo:
        hi = lo + 1.0
    if bins is None:
        q75, q25 = np.percentile(pooled, [75, 25])
        h = 2 * (q75 - q25) * pooled.size ** (-1 / 3)
        bins = int(math.ceil((hi - lo) / h)) if h > 0 else min_bins
        bins = max(bins, min_bins)
    edges = np.linspace(lo, hi, bins + 1)
    counts = {k: np.histogram(v, edges)[0] for k, v in values.items()}
    return Histogram(edges, counts)


# ----------------------------------------------------------- EM fit

@dataclass
class GaussianPair:
    mu1: float
    sigma1: float
    w1: float
    mu2: float
    sigma2: float
    w2: float
    loglik: float
    single: bool = False

    def majority(self):
        """(mu, sigma, weight) of the dominant component."""
        return (self.mu1, self.sigma1, self.w1) if self.w1 >= self.w2 else (self.mu2, self.sigma2, self.w2)

    def minority(self):
        return (self.mu2, self.sigma2, self.w2) if self.w1 >= self.w2 else (self.mu1, self.sigma1, self.w1)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return (self.w1 * _normal_pdf(x, self.mu1, self.sigma1)
                + self.w2 * _normal_pdf(x, self.mu2, self.sigma2))


def _normal_pdf(x, mu, sigma):
    return np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))


def em_two_gaussians(x, counts=None, bin_width: float = 0.0, max_iter: int = 500,
                     n_init: int = 3, tol: float = 1e-10, min_weight: float = 1e-4) -> GaussianPair:
    """Weighted maximum-likelihood two-component Gaussian mixture.

    ``counts`` weight the samples ``x`` (bin centres of a histogram);
    ``bin_width`` applies Sheppard's variance correction. Several
    initialisations are tried and the highest likelihood kept. The fit is
    flagged ``single`` when the minority weight is below ``min_weight`` or
    the Bayesian information criterion prefers one Gaussian.
    """
    x = np.asarray(x, dtype=float)
    c = np.ones_like(x) if counts is None else np.asarray(counts, dtype=float)
    keep = c > 0
    x, c = x[keep], c[keep]
    n = c.sum()
    mean = (c @ x) / n
    var = (c @ (x - mean) ** 2) / n
    floor = max(var * 1e-8, (bin_width**2) / 12 + 1e-300, 1e-300)
    sd = math.sqrt(max(var, floor))

    cdf = np.cumsum(c) / n
    q = lambda p: float(x[min(np.searchsorted(cdf, p), x.size - 1)])
    inits = [(q(0.25), q(0.75)), (x.min() + 0.1 * (x.max() - x.min()), x.max() - 0.1 * (x.max() - x.min())),
             (mean - sd, mean + sd)]
    best = None
    for m1, m2 in inits[:max(1, n_init)]:
        mu = np.array([m1, m2], dtype=float)
        s2 = np.array([var / 4 + floor, var / 4 + floor])
        w = np.array([0.5, 0.5])
        prev = -np.inf
        for _ in range(max_iter):
            logp = (-0.5 * (x[:, None] - mu) ** 2 / s2 - 0.5 * np.log(2 * np.pi * s2) + np.log(np.maximum(w, 1e-300)))
            mx = logp.max(axis=1, keepdims=True)
            lse = mx[:, 0] + np.log(np.exp(logp - mx).sum(axis=1))
            ll = float(c @ lse)
            resp = np.exp(logp - lse[:, None]) * c[:, None]
            nk = resp.sum(axis=0)
            if np.any(nk <= 0):
                break
            w = nk / n
            mu = (resp * x[:, None]).sum(axis=0) / nk
            s2 = (resp * (x[:, None] - mu) ** 2).sum(axis=0) / nk
            s2 = np.maximum(s2, floor)
            if abs(ll - prev) < tol * max(1.0, abs(ll)):
                break
            prev = ll
        if best is None or ll > best[0]:
            best = (ll, mu.copy(), s2.copy(), w.copy())
    ll, mu, s2, w = best
    s2 = np.maximum(s2 - bin_width**2 / 12, floor)
    order = np.argsort(mu)
    mu, s2, w = mu[order], s2[order], w[order]
    # unresolved second component: BIC prefers one Gaussian (3 extra parameters)
    ll1 = float(c @ (-0.5 * (x - mean) ** 2 / max(var, floor) - 0.5 * np.log(2 * np.pi * max(var, floor))))
    single = bool(w.min() < min_weight or 2 * (ll - ll1) < 3 * math.log(max(n, 2.0)))
    if single:
        s = math.sqrt(max(var - bin_width**2 / 12, floor))
        k = int(np.argmax(w))
        mu, s2, w = np.array([mean, mean]), np.array([s, s]) ** 2, np.array([0.0, 0.0])
        w[k] = 1.0
    return GaussianPair(float(mu[0]), float(math.sqrt(s2[0])), float(w[0]),
                        float(mu[1]), float(math.sqrt(s2[1])), float(w[1]), ll, single)


@dataclass
class DoubleGaussianFit:
    fits: dict  # label -> GaussianPair
    residual: dict

    def as_dict(self) -> dict:
        return {"fits": {k: asdict(v) for k, v in self.fits.items()}, "residual": self.residual}


def fit_double_gaussian(hist: Histogram, min_counts: int = 1000) -> DoubleGaussianFit:
    """Per-label two-component Gaussian fit of a histogram (EM on bin centres)."""
    fits, resid = {}, {}
    for label, cnt in hist.counts.items():
        if cnt.sum() < min_counts:
            raise ValueError(f"label '{label}' has {cnt.sum()} counts, need >= {min_counts}")
        gp = em_two_gaussians(hist.centers, cnt, hist.width)
        model = gp.pdf(hist.centers) * cnt.sum() * hist.width
        fits[label] = gp
        resid[label] = float(np.sqrt(np.mean((model - cnt) ** 2)))
    return DoubleGaussianFit(fits, resid)


# ----------------------------------------------------------- fidelity

@dataclass
class FidelityReport:
    I_th: float
    F: float
    eps_g: float
    eps_e: float
    eps_o: float
    eps_o_g: float
    eps_o_e: float
    eps_r_g: float
    eps_r_e: float
    sigma_F: float
    n_g: int
    n_e: int
    e_is_high: bool = True
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def gaussian_intersection(mu_a, s_a, mu_b, s_b) -> float:
    """Crossing point of two normalised Gaussians lying between the means."""
    if mu_a == mu_b:
        raise ValueError("degenerate separation: equal means")
    A = 1 / s_b**2 - 1 / s_a**2
    B = 2 * (mu_a / s_a**2 - mu_b / s_b**2)
    C = mu_b**2 / s_b**2 - mu_a**2 / s_a**2 - 2 * math.log(s_a / s_b)
    lo, hi = min(mu_a, mu_b), max(mu_a, mu_b)
    if abs(A) < 1e-14 * max(1 / s_a**2, 1 / s_b**2):
        roots = [-C / B]
    else:
        disc = B * B - 4 * A * C
        if disc < 0:
            raise ValueError("Gaussians do not intersect")
        r = math.sqrt(disc)
        roots = [(-B - r) / (2 * A), (-B + r) / (2 * A)]
    inside = [x for x in roots if lo <= x <= hi]
    if not inside:
        raise ValueError("no intersection between the means")
    return float(inside[0])


def fidelity(values_g, values_e, fit: DoubleGaussianFit | None = None) -> FidelityReport:
    """Threshold, fidelity and error budget from single-shot values.

    The threshold sits where the majority Gaussians of the two labels
    cross. Overlap errors are their analytic tails beyond it; the
    remainders are the measured errors minus the overlap part.
    """
    vg = np.asarray(values_g, dtype=float)
    ve = np.asarray(values_e, dtype=float)
    if vg.size == 0 or ve.size == 0:
        raise ValueError("both labels are needed")
    if fit is None:
        fit = fit_double_gaussian(build_histogram({"g": vg, "e": ve}), min_counts=0)
    mg, sg, _ = fit.fits["g"].majority()
    me, se, _ = fit.fits["e"].majority()
    th = gaussian_intersection(mg, sg, me, se)
    high = me > mg
    if high:
        eps_g, eps_e = float(np.mean(vg >= th)), float(np.mean(ve <= th))
        eo_g, eo_e = float(gaussian_tail((th - mg) / sg)), float(gaussian_tail((me - th) / se))
    else:
        eps_g, eps_e = float(np.mean(vg <= th)), float(np.mean(ve >= th))
        eo_g, eo_e = float(gaussian_tail((mg - th) / sg)), float(gaussian_tail((th - me) / se))
    F = 1 - (eps_g + eps_e) / 2
    sF = 0.5 * math.sqrt(eps_g * (1 - eps_g) / vg.size + eps_e * (1 - eps_e) / ve.size)
    return FidelityReport(I_th=th, F=F, eps_g=eps_g, eps_e=eps_e, eps_o=eo_g + eo_e,
                          eps_o_g=eo_g, eps_o_e=eo_e, eps_r_g=eps_g - eo_g, eps_r_e=eps_e - eo_e,
                          sigma_F=sF, n_g=int(vg.size), n_e=int(ve.size), e_is_high=bool(high))


# ----------------------------------------------------------- QND

@dataclass
class QndReport:
    P_gg: float
    P_ge: float
    P_eg: float
    P_ee: float
    Q: float
    uncertainty: float
    spacing_ns: float
    counts: dict
    n_records: int

    def as_dict(self) -> dict:
        return asdict(self)


def segment_values(I, times, start_ns: float, stop_ns: float, width_ns: float) -> np.ndarray:
    """Mean signal in consecutive windows [start + k w, start + (k+1) w) up to stop."""
    I = np.atleast_2d(np.asarray(I, dtype=float))
    times = np.asarray(times, dtype=float)
    n_seg = int(math.floor((stop_ns - start_ns) / width_ns + 1e-9))
    cols = []
    for k in range(n_seg):
        a, b = start_ns + k * width_ns, start_ns + (k + 1) * width_ns
        m = (times > a) & (times <= b)
        if not m.any():
            raise ValueError("segment contains no samples")
        cols.append(I[:, m].mean(axis=1))
    return np.array(cols).T


def qnd_metrics(records, I_th: float, segment_spec=(150.0, 1000.0, 30.0), times=None,
                e_is_high: bool = True, z: float = 1.96) -> QndReport:
    """Repeatability of consecutive thresholded measurements.

    ``segment_spec = (start_ns, stop_ns, width_ns)``. P_ab is the
    probability that a segment reads b given the previous one read a;
    Q = (P_gg + P_ee)/2 with a binomial half-width over records.
    """
    if hasattr(records, "I"):
        I, times = records.I, records.times
    else:
        I = np.asarray(records, dtype=float)
        if times is None:
            raise ValueError("times needed for raw arrays")
    seg = segment_values(I, times, *segment_spec)
    if seg.shape[1] < 2:
        raise ValueError("need at least two segments")
    is_e = seg > I_th if e_is_high else seg < I_th
    a, b = is_e[:, :-1].ravel(), is_e[:, 1:].ravel()
    n = {"gg": int(np.sum(~a & ~b)), "ge": int(np.sum(~a & b)),
         "eg": int(np.sum(a & ~b)), "ee": int(np.sum(a & b))}
    ng, ne = n["gg"] + n["ge"], n["eg"] + n["ee"]
    P_gg = n["gg"] / ng if ng else float("nan")
    P_ee = n["ee"] / ne if ne else float("nan")
    Q = 0.5 * (P_gg + P_ee)
    N = I.shape[0]
    unc = z * math.sqrt(max(Q * (1 - Q), 0.0) / N)
    return QndReport(P_gg, 1 - P_gg, 1 - P_ee, P_ee, Q, unc, float(segment_spec[2]), n, N)


# ----------------------------------------------------------- figures of merit

def quality_factor(chi, kappa, T1) -> float:
    """Q_r = 4 chi^2 kappa T1 / (kappa^2/4 + chi^2).

    chi and kappa in MHz (value/2pi), T1 in us.
    """
    if kappa <= 0 or T1 <= 0 or chi == 0:
        raise ValueError("chi, kappa and T1 must be non-zero and positive")
    c, k = 2 * math.pi * chi, 2 * math.pi * kappa
    return 4 * c * c * k * T1 / (k * k / 4 + c * c)


def snr(eta: float, n_photons: float, Q_r: float) -> float:
    """Steady-state SNR = eta * n * Q_r."""
    return eta * n_photons * Q_r


def dispersive_equivalent(chi_target: float, delta: float, alpha_q: float, kappa: float):
    """Transverse coupling that would give the same shift dispersively.

    All inputs in MHz. Returns ``(g_x MHz, Purcell T1 us, |delta|/g_x)``.
    """
    den = delta * (delta + alpha_q)
    if den == 0:
        raise ValueError("delta (delta + alpha) must be non-zero")
    g2 = chi_target * den / alpha_q
    if g2 <= 0:
        raise ValueError("inconsistent signs: g_x^2 would be negative")
    g = math.sqrt(g2)
    T1 = (delta / g) ** 2 / (2 * math.pi * kappa)
    return g, T1, abs(delta) / g


# ----------------------------------------------------------- pipelines

def apply_heralding(batch, weights, I_th: float, e_is_high: bool = True):
    """Keep records whose herald window reads g."""
    if batch.herald is None:
        return batch
    v = batch.herald @ weights
    keep = v < I_th if e_is_high else v > I_th
    return batch.subset(keep)


def fidelity_experiment(sp, n_records: int, readout=None, thermal_pop: float = 0.024,
                        pi_error: float = 0.014, f_leak: float = 0.005, seed: int = 0,
                        herald: bool = True, herald_wait_ns: float = 300.0) -> tuple:
    """Simulate g and e single-shot runs and analyse them.

    Returns ``(FidelityReport, details)`` where details holds the values,
    histogram, fit and weights.
    """
    from .dynamics import ReadoutSpec, simulate_records
    readout = ReadoutSpec() if readout is None else readout
    ss = np.random.SeedSequence(seed)
    sg, se = ss.spawn(2)
    kw = dict(readout=readout, thermal_pop=thermal_pop, pi_error=pi_error, f_leak=f_leak,
              herald=herald, herald_wait_ns=herald_wait_ns)
    bg = simulate_records(sp, "g", n_records, readout.window_ns, seed=sg, **kw)
    be = simulate_records(sp, "e", n_records, readout.window_ns, seed=se, **kw)
    n_kept = (n_records, n_records)
    if herald:
        # herald threshold from the unconditioned herald windows
        hw = np.full(bg.herald.shape[1], 1.0 / bg.herald.shape[1])
        lv = bg.targets["levels"]
        h_th = 0.5 * (lv[0] + lv[1]) * float(_ringup_gain(bg))
        bg = apply_heralding(bg, hw, h_th, lv[1] > lv[0])
        be = apply_heralding(be, hw, h_th, lv[1] > lv[0])
        n_kept = (len(bg), len(be))
    w = matched_weights(bg.I.mean(axis=0), be.I.mean(axis=0))
    vg, ve = single_shot_values(bg, w), single_shot_values(be, w)
    hist = build_histogram({"g": vg, "e": ve})
    fit = fit_double_gaussian(hist, min_counts=min(1000, len(vg), len(ve)))
    rep = fidelity(vg, ve, fit)
    rep.extra = {"n_kept_g": n_kept[0], "n_kept_e": n_kept[1], "snr": bg.targets["snr"],
                 "n_bins": int(hist.edges.size - 1)}
    return rep, {"values_g": vg, "values_e": ve, "hist": hist, "fit": fit, "weights": w,
                 "batch_g": bg, "batch_e": be}


def _ringup_gain(batch) -> float:
    """Mean of the unit-step filter response over the herald window."""
    a = math.exp(-batch.targets["filter_rate"] * (batch.herald_times[0]))
    k = np.arange(1, batch.herald.shape[1] + 1)
    return float(np.mean(1 - a**k))


def qnd_experiment(sp, n_records: int = 1000, readout=None, duration_ns: float = 1000.0,
                   segment_spec=(150.0, 1000.0, 30.0), thermal_pop: float = 0.024,
                   pi_error: float = 0.014, f_leak: float = 0.005, seed: int = 0) -> tuple:
    """QND run: half the records prepared in g, half in e, thresholded per segment."""
    from .dynamics import ReadoutSpec, simulate_records
    readout = ReadoutSpec() if readout is None else readout
    sg, se = np.random.SeedSequence(seed).spawn(2)
    kw = dict(readout=readout, thermal_pop=thermal_pop, pi_error=pi_error, f_leak=f_leak)
    ng = n_records // 2
    bg = simulate_records(sp, "g", ng, duration_ns, seed=sg, **kw)
    be = simulate_records(sp, "e", n_records - ng, duration_ns, seed=se, **kw)
    segs = np.vstack([segment_values(b.I, b.times, *segment_spec) for b in (bg, be)])
    first = np.concatenate([segs[:ng, 0], segs[ng:, 0]])
    pooled = {"g": segs[:ng].ravel(), "e": segs[ng:].ravel()}
    hist = build_histogram(pooled)
    fit = fit_double_gaussian(hist, min_counts=0)
    mg, sg_, _ = fit.fits["g"].majority()
    me, se_, _ = fit.fits["e"].majority()
    th = gaussian_intersection(mg, sg_, me, se_)
    I = np.vstack([bg.I, be.I])
    rep = qnd_metrics(I, th, segment_spec, times=bg.times, e_is_high=me > mg)
    return rep, {"threshold": th, "first_segment": first, "batch_g": bg, "batch_e": be}


# ----------------------------------------------------------- export

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_report_json(path, report) -> None:
    """Dump a FidelityReport / QndReport (or a plain dict) with sorted keys."""
    data = report.as_dict() if hasattr(report, "as_dict") else report
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_histogram_csv(path, hist: Histogram) -> None:
    """Columns: bin_low, bin_high, then one count column per label."""
    labels = sorted(hist.counts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_low", "bin_high"] + [f"count_{k}" for k in labels])
        for i in range(hist.edges.size - 1):
            w.writerow([repr(float(hist.edges[i])), repr(float(hist.edges[i + 1]))]
                       + [int(hist.counts[k][i]) for k in labels])
