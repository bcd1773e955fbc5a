"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary (see conftest.py) and also echoed with ``-s``.
"""
import math
import time
import warnings

import numpy as np
import pytest

from crosskerr import qops
from crosskerr.circuit import derive_params, full_spectrum_summary
from crosskerr.dynamics import (ReadoutSpec, bare_branch_model, evolve, field_expectation,
                                qubit_polariton_model, simulate_records, steady_state,
                                transmission_amplitude)
from crosskerr.imperfect import (ImperfectionParams, g_qa_from_asymmetry, g_qc_from_misalignment,
                                 purcell_numeric, purcell_vs_flux)
from crosskerr.polariton import SystemParams, hybridization_angle, invert_decays, polariton_decays, polariton_params
from crosskerr.presets import (DEVICE_IMPERFECTIONS, FLUX5_SYSTEM, PREP_ERRORS, ZERO_FLUX_CIRCUIT,
                               ZERO_FLUX_SYSTEM)
from crosskerr.readout import (dispersive_equivalent, em_two_gaussians, fidelity_experiment,
                               qnd_experiment, quality_factor)
from crosskerr.spectro import SpectroscopyCurve, conditional_shift, fit_two_lorentzians, sweep_frequency

ACCEPTANCE_RESULTS = {}


def record(n: int, title: str, checks: dict, elapsed: float, limit: float):
    """Store and print the verdict; ``checks`` maps a description to a bool."""
    checks = dict(checks)
    checks[f"runtime {elapsed:.2f} s < {limit:g} s"] = elapsed < limit
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {title}"
    if failed:
        line += " | failed: " + "; ".join(failed)
    ACCEPTANCE_RESULTS[n] = line
    print(line)
    for k, v in checks.items():
        print(f"    [{'ok' if v else 'XX'}] {k}")
    assert ok, line


def test_acceptance_01_parameter_chain():
    t = time.perf_counter()
    dp = derive_params(ZERO_FLUX_CIRCUIT)
    el = time.perf_counter() - t
    a, ec, gz, ua = dp.alpha_q * 1e3, dp.E_Ca * 1e3, dp.g_zz * 1e3, dp.U_a * 1e3
    record(1, "parameter chain", {
        f"alpha_q {a:.2f} MHz = -88 +- 0.5": abs(a + 88) <= 0.5,
        f"E_Ca {ec:.2f} MHz = 42.2 +- 0.5": abs(ec - 42.2) <= 0.5,
        f"g_zz {gz:.2f} MHz = 34.5 +- 0.5": abs(gz - 34.5) <= 0.5,
        f"U_a {ua:.2f} MHz = -13.5 +- 0.3": abs(ua + 13.5) <= 0.3,
    }, el, 1.0)


def test_acceptance_02_hybridization():
    t = time.perf_counter()
    th = [hybridization_angle(s.omega_a_prime, s.omega_c, s.g_ac, -1, s.g_zz)
          for s in (ZERO_FLUX_SYSTEM, FLUX5_SYSTEM)]
    el = time.perf_counter() - t
    record(2, "hybridization angle", {
        f"theta(0) {th[0]:.4f} = 0.384 +- 0.002": abs(th[0] - 0.384) <= 0.002,
        f"theta(5) {th[1]:.4f} = 0.602 +- 0.002": abs(th[1] - 0.602) <= 0.002,
    }, el, 1.0)


def test_acceptance_03_polariton_frequencies():
    t = time.perf_counter()
    p0, p5 = polariton_params(ZERO_FLUX_SYSTEM, -1), polariton_params(FLUX5_SYSTEM, -1)
    ident = max(abs(p.omega_l_bar + p.omega_u_bar - s.omega_c - s.omega_a_bar)
                for p, s in ((p0, ZERO_FLUX_SYSTEM), (p5, FLUX5_SYSTEM)))
    el = time.perf_counter() - t
    checks = {}
    for p, ref, tag in ((p0, (7.038, 7.911), "0"), (p5, (6.966, 7.599), "5")):
        for val, r, br in ((p.omega_l_bar, ref[0], "l"), (p.omega_u_bar, ref[1], "u")):
            checks[f"omega_{br}({tag}) {val:.4f} GHz = {r} +- 15 MHz"] = abs(val - r) <= 0.015
    checks[f"sum identity residual {ident:.1e} <= 1e-9"] = ident <= 1e-9
    record(3, "polariton frequencies", checks, el, 1.0)


def test_acceptance_04_decay_inversion():
    t = time.perf_counter()
    kc, ka = invert_decays(11.8, 7.1, 0.384)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        c, a, th = rng.uniform(1, 30), rng.uniform(1, 30), rng.uniform(0.05, 0.7)
        c2, a2 = invert_decays(*polariton_decays(c, a, th), th)
        worst = max(worst, abs(c2 - c) / c, abs(a2 - a) / a)
    el = time.perf_counter() - t
    record(4, "decay inversion", {
        f"kappa_c {kc:.3f} = 12.7 +- 0.1": abs(kc - 12.7) <= 0.1,
        f"kappa_a {ka:.3f} = 6.2 +- 0.1": abs(ka - 6.2) <= 0.1,
        f"roundtrip relative error {worst:.1e} <= 1e-12": worst <= 1e-12,
    }, el, 1.0)


def test_acceptance_05_conditional_shifts():
    t = time.perf_counter()
    checks = {}
    grids = {0: np.linspace(6.85, 8.05, 2401), 5: np.linspace(6.85, 7.75, 1801)}
    refs = {0: {"l": -9.0}, 5: {"l": -22.2, "u": -46.8}}
    for n, sp in ((0, ZERO_FLUX_SYSTEM), (5, FLUX5_SYSTEM)):
        cg, ce = sweep_frequency(sp, grids[n], -1), sweep_frequency(sp, grids[n], 1)
        sh = conditional_shift(cg, ce)
        got = {"l": sh.shift_l * 1e3, "u": sh.shift_u * 1e3}
        for br, r in refs[n].items():
            checks[f"2chi_{br}({n}) {got[br]:.2f} MHz = {r} +- 1"] = abs(got[br] - r) <= 1.0
        # sum rule on noisy curves (0.1% noise), compared with the propagated fit error
        rng = np.random.default_rng(n)
        noisy = [SpectroscopyCurve(c.grid, c.magnitude + 1e-3 * c.magnitude.max() * rng.standard_normal(c.grid.size))
                 for c in (cg, ce)]
        shn = conditional_shift(*noisy)
        dev = abs(shn.total + 2 * sp.g_zz)
        checks[f"|2chi_l+2chi_u+2g_zz|({n}) {dev * 1e3:.4f} MHz <= 3 x fit error {shn.total_err * 1e3:.4f}"] = \
            dev <= 3 * shn.total_err
    el = time.perf_counter() - t
    record(5, "conditional shifts", checks, el, 10.0)


def test_acceptance_06_full_circuit_vs_effective_model():
    checks = {}
    worst_time = 0.0
    cp = ZERO_FLUX_CIRCUIT
    for n in range(10):
        t = time.perf_counter()
        s = full_spectrum_summary(cp, n, (6, 8, 8))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sp = SystemParams.from_derived(derive_params(cp, n), cp.omega_c, cp.g_ac, 12.7, 6.2)
        g = polariton_params(sp, -1, "conditional")
        e = polariton_params(sp, 1, "conditional")
        worst_time = max(worst_time, time.perf_counter() - t)
        pairs = {"omega_l": (g.omega_l_bar, s["omega_l_g"]), "omega_u": (g.omega_u_bar, s["omega_u_g"]),
                 "2chi_l": (e.omega_l_bar - g.omega_l_bar, s["shift_l"]),
                 "2chi_u": (e.omega_u_bar - g.omega_u_bar, s["shift_u"])}
        for k, (eff, full) in pairs.items():
            d = abs(eff / full - 1) * 100
            checks[f"n={n} {k}: effective vs full differ {d:.2f}% <= 2%"] = d <= 2.0
    record(6, "full circuit vs effective model", checks, worst_time, 60.0)


def test_acceptance_07_master_equation_oracle():
    t = time.perf_counter()
    checks = {}
    sp = ZERO_FLUX_SYSTEM
    for sz in (-1, 1):
        pp = polariton_params(sp, sz, "conditional")
        ratio = sp.drive_strength / pp.kappa_l
        grid = np.concatenate([np.linspace(pp.omega_l_bar - 0.03, pp.omega_l_bar + 0.03, 9),
                               np.linspace(pp.omega_u_bar - 0.03, pp.omega_u_bar + 0.03, 9)])
        me = []
        for wd in grid:
            m = bare_branch_model(sp, sz, (4, 4), wd)
            me.append(field_expectation(m, steady_state(m)))
        cf = transmission_amplitude(sp, grid, sz, "conditional")
        err = np.max(np.abs(np.array(me) - cf)) / np.max(np.abs(cf))
        checks[f"sigma_z={sz:+d}: Omega/kappa_l {ratio:.4f} <= 0.05"] = ratio <= 0.05
        checks[f"sigma_z={sz:+d}: max deviation {err * 100:.3f}% < 1%"] = err < 0.01
    el = time.perf_counter() - t
    record(7, "master-equation oracle", checks, el, 30.0)


def test_acceptance_08_readout_figures_of_merit():
    t = time.perf_counter()
    q = quality_factor(4.5, 11.8, 3.3)
    g, T1, ratio = dispersive_equivalent(-4.5, -754.0, -88.0, 11.8)
    el = time.perf_counter() - t
    record(8, "readout figures of merit", {
        f"Q_r {q:.1f} = 360 +- 2%": abs(q / 360 - 1) <= 0.02,
        f"g_x {g:.1f} MHz = 180 +- 5%": abs(g / 180 - 1) <= 0.05,
        f"Purcell T1 {T1:.3f} us = 0.24 +- 10%": abs(T1 / 0.24 - 1) <= 0.10,
        f"validity ratio {ratio:.2f} = 4.2 +- 0.2": abs(ratio - 4.2) <= 0.2,
    }, el, 1.0)


def test_acceptance_09_imperfections():
    t = time.perf_counter()
    cp = ZERO_FLUX_CIRCUIT
    dp = derive_params(cp)
    gqa = abs(g_qa_from_asymmetry(DEVICE_IMPERFECTIONS.d_J, dp.omega_q_harm, dp.omega_a_harm,
                                  dp.inductance_ratio)) * 1e3
    gqc = g_qc_from_misalignment(DEVICE_IMPERFECTIONS.theta_m, cp.g_ac) * 1e3
    kc = 12.7
    sym = max(purcell_numeric(cp, ImperfectionParams(), float(n), kc, 6.2).gamma for n in range(10))
    rows = purcell_vs_flux(cp, DEVICE_IMPERFECTIONS, range(10), kc, {float(n): (11.2 if n >= 5 else 6.2)
                                                                      for n in range(10)})
    T1 = [r["T1_both"] for r in rows]
    el = time.perf_counter() - t
    record(9, "imperfections", {
        f"|g_qa| {gqa:.2f} MHz = 26.1 +- 0.3": abs(gqa - 26.1) <= 0.3,
        f"|g_qc| {gqc:.2f} MHz = 25.8": abs(gqc - 25.8) <= 0.05,
        f"symmetric circuit Gamma {sym:.1e} /us <= 1e-6 kappa_c": sym <= 1e-6 * 2 * math.pi * kc,
        f"T1(9) {T1[-1]:.2f} us < T1(0) {T1[0]:.2f} us": T1[-1] < T1[0],
        f"T1(0) {T1[0]:.2f} us same order as measured 3.3 us": 0.33 < T1[0] < 33,
    }, el, 300.0)


def test_acceptance_10_stochastic_pipeline():
    t = time.perf_counter()
    sp, ro = ZERO_FLUX_SYSTEM, ReadoutSpec(n_photons=2.0, window_ns=50.0)
    pe = PREP_ERRORS
    rep, _ = fidelity_experiment(sp, 20000, ro, pe["thermal_pop"], pe["pi_error"], pe["f_leak"], seed=1)
    q, _ = qnd_experiment(sp, 1000, ro, 1000.0, (150.0, 1000.0, 30.0), pe["thermal_pop"], pe["pi_error"],
                          pe["f_leak"], seed=1)
    b = simulate_records(sp, "e", 20000, 1000.0, ro, pe["thermal_pop"], seed=2, pi_error=pe["pi_error"],
                         f_leak=pe["f_leak"], noise=False)
    jump = float(b.has_jump.mean())
    r1, d1 = fidelity_experiment(sp, 500, ro, seed=11)
    r2, d2 = fidelity_experiment(sp, 500, ro, seed=11)
    same = np.array_equal(d1["values_g"], d2["values_g"]) and r1.F == r2.F
    el = time.perf_counter() - t
    record(10, "stochastic pipeline", {
        f"F {rep.F * 100:.2f}% in [96, 98.5]": 0.96 <= rep.F <= 0.985,
        f"eps_o {rep.eps_o * 100:.2f}% = 0.8 +- 0.3": abs(rep.eps_o - 0.008) <= 0.003,
        f"Q {q.Q * 100:.2f}% in [98, 100]": 0.98 <= q.Q <= 1.0,
        f"Q uncertainty {q.uncertainty * 100:.2f}% ~ 0.6 (+-0.3)": abs(q.uncertainty - 0.006) <= 0.003,
        f"jump fraction {jump * 100:.1f}% = 26 +- 3": abs(jump - 0.26) <= 0.03,
        "deterministic under fixed seed": same,
    }, el, 120.0)


def test_acceptance_11_numerical_hygiene():
    t = time.perf_counter()
    sp = ZERO_FLUX_SYSTEM
    pp = polariton_params(sp, -1)
    m = qubit_polariton_model(sp, (2, 3, 3), pp.omega_l_bar)
    plus = np.zeros(18)
    plus[[0, 9]] = 1 / math.sqrt(2)
    worst = {"trace_error": 0.0, "hermiticity": 0.0, "min_eig": 0.0}
    for s in evolve(m, np.outer(plus, plus).astype(complex), np.linspace(0, 300, 31)):
        d = qops.check_density_matrix(s.data)
        worst = {k: max(worst[k], d[k]) if k != "min_eig" else min(worst[k], d[k]) for k in worst}

    rng = np.random.default_rng(0)
    minor = rng.random(20000) < 0.03
    gp = em_two_gaussians(np.where(minor, rng.normal(1.0, 0.1, 20000), rng.normal(0.0, 0.1, 20000)))
    truth = {"mu2": 1.0, "sigma1": 0.1, "sigma2": 0.1, "w1": 0.97, "w2": 0.03}
    em_err = max(abs(getattr(gp, k) / v - 1) for k, v in truth.items())
    em_err = max(em_err, abs(gp.mu1) / 0.1)

    grid = np.linspace(6.85, 7.75, 1801)
    clean = sweep_frequency(FLUX5_SYSTEM, grid, -1)
    p5 = polariton_params(FLUX5_SYSTEM, -1)
    lor = 0.0
    for seed in range(5):
        r = np.random.default_rng(seed)
        c = SpectroscopyCurve(grid, clean.magnitude + 1e-3 * clean.magnitude.max() * r.standard_normal(grid.size))
        fl, fu = fit_two_lorentzians(c)
        lor = max(lor, abs(fl.center - p5.omega_l_bar), abs(fu.center - p5.omega_u_bar))
    el = time.perf_counter() - t
    record(11, "numerical hygiene", {
        f"trace error {worst['trace_error']:.1e} < 1e-9": worst["trace_error"] < 1e-9,
        f"hermiticity {worst['hermiticity']:.1e} < 1e-9": worst["hermiticity"] < 1e-9,
        f"min eigenvalue {worst['min_eig']:.1e} > -1e-8": worst["min_eig"] > -1e-8,
        f"double-Gaussian worst relative error {em_err * 100:.2f}% <= 5%": em_err <= 0.05,
        f"Lorentzian worst center error {lor * 1e3:.4f} MHz <= 0.1": lor <= 1e-4,
    }, el, 120.0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
