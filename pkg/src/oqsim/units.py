"""Unit conventions and physical constants.

All energies are in microelectronvolts (ueV) and all times in
nanoseconds (ns) unless a name says otherwise.  Angular frequencies in
these units are E / HBAR with HBAR in ueV ns.  SI values appear only at
the boundaries that talk to circuit hardware (ohms, farads, volts).
"""

from __future__ import annotations

# CODATA 2018 values, expressed in the package units.
MU_B = 57.883818060  # Bohr magneton, ueV / T
KB = 86.17333262  # Boltzmann constant, ueV / K
HBAR = 0.6582119569  # reduced Planck constant, ueV ns

# SI-side constants for circuit formulas.
E_CHARGE = 1.602176634e-19  # elementary charge, C
HBAR_SI = 1.054571817e-34  # reduced Planck constant, J s
H_SI = 6.62607015e-34  # Planck constant, J s

UEV_TO_J = E_CHARGE * 1e-6  # 1 ueV in joules
MEV_TO_UEV = 1.0e3


def kelvin_to_uev(temperature_k: float) -> float:
    """Thermal energy k_B T in ueV."""
    return KB * temperature_k


def uev_to_rad_per_ns(energy_uev: float) -> float:
    return energy_uev / HBAR


def uev_to_rad_per_s(energy_uev: float):
    """Angular frequency in SI rad/s for an energy quantum in ueV."""
    return energy_uev * UEV_TO_J / HBAR_SI


def rad_per_s_to_uev(omega_si: float):
    return omega_si * HBAR_SI / UEV_TO_J


def uev_to_ghz(energy_uev: float) -> float:
    """Ordinary (not angular) frequency E/h in GHz."""
    return energy_uev * UEV_TO_J / H_SI * 1e-9
