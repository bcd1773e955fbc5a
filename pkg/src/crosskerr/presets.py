"""Reference parameter sets for the measured device."""
from __future__ import annotations

from .circuit import CircuitParams, squid_chain_table
from .imperfect import ImperfectionParams
from .polariton import SystemParams

L_A0_NH = 5.32
SQUID_PERIOD = 29.3095

ZERO_FLUX_CIRCUIT = CircuitParams(
    E_J=29.2, d_J=0.0, C_S=110.0, C_t=59.6,
    L_a_of_n=squid_chain_table(L_A0_NH, SQUID_PERIOD, 9),
    flux=0.0, omega_c=7.169, g_ac=0.295)

DEVICE_IMPERFECTIONS = ImperfectionParams(d_J=0.013, theta_m=5.0)

ZERO_FLUX_SYSTEM = SystemParams(
    omega_q_prime=6.284, omega_a_prime=7.7455, omega_c=7.169, g_zz=0.0345, g_ac=0.295,
    kappa_c=12.7, kappa_a=6.2, T1=3.3, T2_star=3.2, drive_strength=0.1, eta=0.10)

FLUX5_SYSTEM = ZERO_FLUX_SYSTEM.replace(omega_a_prime=7.3615, kappa_a=11.2)

# measured T1 (us) at zero and nine flux quanta
MEASURED_T1 = {0.0: 3.3, 9.0: 0.9}

# state-preparation imperfections used for the single-shot runs
PREP_ERRORS = {"thermal_pop": 0.024, "pi_error": 0.014, "f_leak": 0.005}
