import math
import warnings

import numpy as np
import pytest

from crosskerr import qops
from crosskerr.dynamics import (LindbladModel, ReadoutSpec, bare_branch_model, evolve,
                                field_expectation, mhz_to_rate, polariton_branch_model,
                                qubit_polariton_model, read_records_csv, readout_quality,
                                record_targets,
                                simulate_records, steady_state, transmission_amplitude,
                                write_records_csv)
from crosskerr.polariton import polariton_params
from crosskerr.qops import HilbertSpace, Operator


def _vacuum(d):
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1
    return rho


def test_qubit_relaxation_law():
    sp = HilbertSpace.from_dims(qubit=2)
    T1 = 3300.0
    model = LindbladModel(Operator(sp, np.zeros((2, 2))), [(qops.ladder(sp, "qubit"), 1 / T1)])
    t = np.linspace(0, 5000, 11)
    states = evolve(model, np.diag([0, 1]).astype(complex), t)
    sz = np.diag([-1, 1])
    got = np.array([s.expect(sz).real for s in states])
    assert np.allclose(got, 2 * np.exp(-t / T1) - 1, atol=1e-8)


def test_evolution_preserves_state_properties(system):
    pp = polariton_params(system, -1)
    m = qubit_polariton_model(system, (2, 3, 3), pp.omega_l_bar)
    rho0 = np.zeros((18, 18), dtype=complex)
    plus = np.zeros(18)
    plus[[0, 9]] = 1 / math.sqrt(2)
    rho0 = np.outer(plus, plus).astype(complex)
    for s in evolve(m, rho0, np.linspace(0, 300, 31)):
        d = qops.check_density_matrix(s.data)
        assert d["trace_error"] < 1e-9 and d["hermiticity"] < 1e-9 and d["min_eig"] > -1e-8


def test_long_evolution_reaches_steady_state(system):
    pp = polariton_params(system, -1)
    m = polariton_branch_model(system, -1, (4, 3), pp.omega_l_bar)
    ss = steady_state(m).dm()
    last = evolve(m, _vacuum(12), [0, 20 * 2 / mhz_to_rate(pp.kappa_l)])[-1].dm()
    assert np.max(np.abs(last - ss)) < 1e-6


def test_ring_up_time_constant(system):
    pp = polariton_params(system, -1)
    tau = 2 / mhz_to_rate(pp.kappa_l)
    assert abs(tau - 27.0) < 0.5
    m = polariton_branch_model(system, -1, (4, 3), pp.omega_l_bar)
    a_ss = field_expectation(m, steady_state(m))
    states = evolve(m, _vacuum(12), [0, tau, 3 * tau])
    rel = [abs(field_expectation(m, s) - a_ss) / abs(a_ss) for s in states]
    assert abs(rel[1] - math.exp(-1)) < 0.01
    assert abs(rel[2] - math.exp(-3)) < 0.01


def test_undriven_steady_state_is_ground_vacuum(system):
    m = qubit_polariton_model(system.replace(drive_strength=0.0), (2, 3, 3), 7.0)
    rho = steady_state(m).dm()
    assert abs(rho[0, 0] - 1) < 1e-10


def test_driven_damped_mode_linear_response():
    sp = HilbertSpace.from_dims(c=10)
    c = qops.ladder(sp, "c")
    kappa, delta, omega = 0.012, 0.004, 0.0005  # GHz
    H = -delta * (c.dag() @ c) + omega * (c + c.dag())
    m = LindbladModel(H, [(c, 2 * math.pi * kappa)], field_op=c)
    got = field_expectation(m, steady_state(m))
    assert abs(got - (-1j * omega / (kappa / 2 - 1j * delta))) < 1e-8


def test_steady_state_independent_of_initial_state(system):
    pp = polariton_params(system, -1)
    m = polariton_branch_model(system, -1, (3, 3), pp.omega_l_bar)
    ss = steady_state(m).dm()
    rng = np.random.default_rng(0)
    for _ in range(2):
        x = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        r = x @ x.conj().T
        r /= np.trace(r)
        last = evolve(m, r, [0, 1500.0])[-1].dm()
        assert np.max(np.abs(last - ss)) < 1e-8


def test_steady_state_uniqueness_check():
    sp = HilbertSpace.from_dims(c=3)
    m = LindbladModel(Operator(sp, np.zeros((3, 3))), [])
    with pytest.raises(ValueError, match="not unique"):
        steady_state(m)


def test_joint_model_matches_ground_branch(system):
    pp = polariton_params(system, -1)
    for wd in (pp.omega_l_bar, pp.omega_l_bar + 0.004, pp.omega_u_bar):
        m = qubit_polariton_model(system, (2, 3, 3), wd)
        got = field_expectation(m, steady_state(m))
        ref = transmission_amplitude(system, wd, -1)
        assert abs(got - ref) / abs(ref) < 0.01


@pytest.mark.parametrize("sz", [-1, 1])
def test_master_equation_oracle(system, sz):
    pp = polariton_params(system, sz, "conditional")
    assert system.drive_strength / pp.kappa_l <= 0.05
    grid = np.concatenate([np.linspace(pp.omega_l_bar - 0.03, pp.omega_l_bar + 0.03, 9),
                           np.linspace(pp.omega_u_bar - 0.03, pp.omega_u_bar + 0.03, 9)])
    me = []
    for wd in grid:
        m = bare_branch_model(system, sz, (4, 4), wd)
        me.append(field_expectation(m, steady_state(m)))
    cf = transmission_amplitude(system, grid, sz, "conditional")
    assert np.max(np.abs(np.array(me) - cf)) / np.max(np.abs(cf)) < 0.01


def test_resonant_peak_height(system):
    pp = polariton_params(system, -1)
    a = transmission_amplitude(system, pp.omega_l_bar, -1)
    dominant = 2 * system.drive_strength * math.cos(pp.theta) ** 2 / pp.kappa_l
    assert abs(abs(a) - dominant) / dominant < 0.02


def test_strong_drive_warns(system):
    with pytest.warns(UserWarning, match="not weak"):
        transmission_amplitude(system.replace(drive_strength=5.0), 7.0)


# ----------------------------------------------------------------- records

def test_noiseless_records_without_decay_are_constant(system):
    sp = system.replace(T1=math.inf)
    for prep, lvl in (("g", 0), ("e", 1)):
        b = simulate_records(sp, prep, 5, 500, noise=False, start="steady", seed=1)
        assert np.allclose(b.I, b.targets["levels"][lvl])


def test_jump_fraction_over_one_microsecond(system):
    b = simulate_records(system, "e", 1000, 1000, noise=False, seed=11)
    expected = 1 - math.exp(-1000 / 3300)
    sigma = math.sqrt(expected * (1 - expected) / 1000)
    assert abs(b.has_jump.mean() - expected) < 3 * sigma


def test_no_upward_jumps_at_zero_temperature(system):
    b = simulate_records(system, "g", 500, 1000, noise=False, seed=2)
    assert not b.has_jump.any()
    assert np.all(b.initial_level == 0)


def test_excited_mean_decays_with_T1(system):
    b = simulate_records(system, "e", 4000, 1000, noise=False, start="steady", seed=5)
    lv = b.targets["levels"]
    frac = (b.I.mean(axis=0) - lv[0]) / (lv[1] - lv[0])
    k = np.searchsorted(b.times, [300, 600, 1000])
    expected = np.exp(-b.times[k] / 3300)
    # filter lag of ~27 ns and binomial scatter
    assert np.all(np.abs(frac[k] - expected) < 0.03)


def test_records_are_deterministic(system):
    a = simulate_records(system, "e", 20, 200, seed=9, thermal_pop=0.02)
    b = simulate_records(system, "e", 20, 200, seed=9, thermal_pop=0.02)
    c = simulate_records(system, "e", 20, 200, seed=10, thermal_pop=0.02)
    assert np.array_equal(a.I, b.I)
    assert not np.array_equal(a.I, c.I)


def test_ensemble_mean_converges_as_inverse_sqrt(system):
    errs = []
    for n in (100, 400, 1600):
        b = simulate_records(system, "g", n, 400, seed=n, start="steady")
        errs.append(np.sqrt(np.mean((b.I.mean(axis=0) - b.targets["levels"][0]) ** 2)))
    assert 1.7 < errs[0] / errs[1] < 2.3
    assert 1.7 < errs[1] / errs[2] < 2.3


def test_noise_calibration_matches_snr(system):
    ro = ReadoutSpec()
    b = simulate_records(system, "g", 4000, ro.window_ns, seed=3, start="steady", readout=ro)
    tg = record_targets(system, ro)
    win = b.I.mean(axis=1)
    assert abs(win.std() / tg["sigma_window"] - 1) < 0.05
    sep = tg["levels"][1] - tg["levels"][0]
    assert math.isclose((sep / tg["sigma_window"]) ** 2, tg["snr"])
    assert math.isclose(tg["snr"], system.eta * ro.n_photons * readout_quality(system))


def test_drive_sits_on_excited_lower_polariton(system):
    tg = record_targets(system, ReadoutSpec())
    pp = polariton_params(system, -1)
    assert math.isclose(tg["drive_freq"], pp.omega_l_bar + 2 * pp.chi_l)
    assert tg["levels"][1] > tg["levels"][0]


def test_record_validation(system):
    with pytest.raises(ValueError):
        simulate_records(system, "x", 1, 100)
    with pytest.raises(ValueError):
        simulate_records(system, "g", 1, 100, thermal_pop=1.5)
    with pytest.raises(ValueError):
        ReadoutSpec(window_ns=1.0, dt_ns=2.0)
    with pytest.warns(UserWarning):
        ReadoutSpec(n_photons=8)


def test_records_csv_roundtrip(system, tmp_path):
    b = simulate_records(system, "e", 3, 40, seed=4)
    p = tmp_path / "rec.csv"
    write_records_csv(p, b)
    header = p.read_text().splitlines()[0]
    assert header == "record,time_ns,I,prepared"
    back = read_records_csv(p)["e"]
    assert np.array_equal(back.times, b.times)
    assert np.array_equal(back.I, b.I)
