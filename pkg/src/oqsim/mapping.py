"""Target-to-simulator parameter mapping.

The simulator runs at a cryogenic temperature T_qs and emulates a
target problem at temperature T.  The temperature ratio
gamma = T / T_qs stretches times by gamma and shrinks energies by
1/gamma.  This module computes the control fields that realize a given
target Hamiltonian, coherence budgets, and a scaling table for
operating-point planning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .units import HBAR, MU_B, uev_to_ghz

# Hardware feasibility caps used by default in feasibility().
B_AVG_CAP_T = 5.0
DELTA_B_CAP_T = 0.1


@dataclass(frozen=True)
class MappingSpec:
    """Operating point of the simulator.

    Temperatures in kelvin, tunnel_coupling and sigma_epsilon in ueV.
    sensitivity is the charge sensitivity k_s = cos^2(theta) of the
    qubit splitting to detuning, in (0, 1).  gamma_ratio is derived
    from the temperatures when not given explicitly and must equal
    their ratio when it is.
    """

    target_temperature: float
    simulator_temperature: float
    sensitivity: float
    tunnel_coupling: float
    g_factor: float = 2.0
    sigma_epsilon: float = 2.0
    gamma_ratio: float = field(default=0.0)

    def __post_init__(self):
        if self.target_temperature <= 0 or self.simulator_temperature <= 0:
            raise ValueError("temperatures must be positive")
        if not 0.0 < self.sensitivity < 1.0:
            raise ValueError("sensitivity must lie strictly between 0 and 1")
        if self.tunnel_coupling <= 0:
            raise ValueError("tunnel_coupling must be positive")
        ratio = self.target_temperature / self.simulator_temperature
        if self.gamma_ratio == 0.0:
            object.__setattr__(self, "gamma_ratio", ratio)
        elif abs(self.gamma_ratio - ratio) > 1e-12 * ratio:
            raise ValueError("gamma_ratio inconsistent with temperature ratio")


def spec_from_gamma(
    target_temperature: float,
    gamma_ratio: float,
    sensitivity: float,
    tunnel_coupling: float,
    **kwargs,
) -> MappingSpec:
    """Build a MappingSpec from the temperature ratio instead of T_qs."""
    if gamma_ratio <= 0:
        raise ValueError("gamma_ratio must be positive")
    return MappingSpec(
        target_temperature=target_temperature,
        simulator_temperature=target_temperature / gamma_ratio,
        sensitivity=sensitivity,
        tunnel_coupling=tunnel_coupling,
        **kwargs,
    )


@dataclass(frozen=True)
class ControlFields:
    """Experimental knobs: detuning in ueV, fields in tesla."""

    detuning: float
    b_avg: float
    delta_b: float


def sensitivity_of(detuning: float, tunnel_coupling: float) -> float:
    """Charge sensitivity k_s = cos^2(theta) at a given operating point."""
    if tunnel_coupling <= 0:
        raise ValueError("tunnel_coupling must be positive")
    # cos^2(theta) = (1 + eps / sqrt(eps^2 + 4 t_c^2)) / 2, monotone in eps.
    r = detuning / np.hypot(detuning, 2.0 * tunnel_coupling)
    return 0.5 * (1.0 + float(r))


def control_fields(spec: MappingSpec, delta: float, eta: float) -> ControlFields:
    """Solve for the controls that realize target splitting delta and coupling eta.

    delta and eta are target-frame energies in ueV; the simulator sees
    delta/gamma and eta/gamma.  Negative delta inverts the qubit and
    can drive b_avg negative, which is permitted but flagged.
    """
    ks = spec.sensitivity
    tc = spec.tunnel_coupling
    g = spec.gamma_ratio
    if delta < 0:
        warnings.warn("negative target splitting: inverted qubit, check b_avg sign")
    detuning = tc * (2.0 * ks - 1.0) / np.sqrt(ks * (1.0 - ks))
    b_avg = (tc * np.sqrt(ks / (1.0 - ks)) + delta / g) / (spec.g_factor * MU_B)
    delta_b = (eta / (spec.g_factor * MU_B * g)) * np.sqrt(8.0 / (1.0 - ks))
    return ControlFields(detuning=float(detuning), b_avg=float(b_avg), delta_b=float(delta_b))


def feasibility(
    fields: ControlFields,
    b_avg_cap: float = B_AVG_CAP_T,
    delta_b_cap: float = DELTA_B_CAP_T,
) -> dict:
    """Check controls against hardware caps; returns flags and messages."""
    messages = []
    if not 0.0 <= fields.b_avg <= b_avg_cap:
        messages.append(f"b_avg = {fields.b_avg:.4g} T outside [0, {b_avg_cap:g}] T")
    if abs(fields.delta_b) > delta_b_cap:
        messages.append(f"|delta_b| = {abs(fields.delta_b):.4g} T exceeds {delta_b_cap:g} T")
    return {"feasible": not messages, "warnings": messages}


@dataclass(frozen=True)
class CoherenceBudget:
    tau_d_ns: float
    tau_target_ps: float


def coherence_budget(spec: MappingSpec) -> CoherenceBudget:
    """Dephasing-limited simulation window.

    Charge noise of width sigma_epsilon dephases the qubit in
    tau_d = 2 pi hbar / (k_s sigma_epsilon) of simulator time, which
    buys tau_d / gamma of target time.
    """
    if spec.sigma_epsilon <= 0:
        raise ValueError("sigma_epsilon must be positive")
    tau_d = 2.0 * np.pi * HBAR / (spec.sensitivity * spec.sigma_epsilon)
    tau_target_ps = tau_d / spec.gamma_ratio * 1e3
    return CoherenceBudget(tau_d_ns=float(tau_d), tau_target_ps=float(tau_target_ps))


def eta_upper_limit(gamma_ratio: float, g_factor: float, delta_b_max: float) -> float:
    """Largest target coupling reachable with a field gradient of delta_b_max tesla."""
    if gamma_ratio <= 0 or g_factor <= 0 or delta_b_max < 0:
        raise ValueError("inputs must be positive (delta_b_max may be zero)")
    return gamma_ratio * g_factor * MU_B * delta_b_max / (2.0 * np.sqrt(2.0))


# ---------------------------------------------------------------------------
# Scale report


@dataclass(frozen=True)
class TargetQuantity:
    """One target-frame quantity to translate: value in the named unit."""

    label: str
    value: float
    unit: str  # one of the keys below


_TIME_UNITS = {"fs": 1e-6, "ps": 1e-3, "ns": 1.0, "us": 1e3}  # to ns
_ENERGY_UNITS = {"neV": 1e-3, "ueV": 1.0, "meV": 1e3, "eV": 1e6}  # to ueV


@dataclass(frozen=True)
class ScaleRow:
    label: str
    target_value: float
    target_unit: str
    simulator_value: float
    simulator_unit: str
    simulator_ghz: float | None  # E/h rendering, energies only


@dataclass(frozen=True)
class ScaleReport:
    gamma_ratio: float
    rows: tuple[ScaleRow, ...]

    def to_text(self) -> str:
        lines = [
            f"scale report, gamma = {self.gamma_ratio:g}",
            f"{'quantity':<32}{'target':>16}  {'simulator':>16}  {'(freq)':>12}",
        ]
        for r in self.rows:
            ghz = f"{r.simulator_ghz:.4g} GHz" if r.simulator_ghz is not None else ""
            lines.append(
                f"{r.label:<32}{r.target_value:>10.6g} {r.target_unit:<5} "
                f"{r.simulator_value:>10.6g} {r.simulator_unit:<5} {ghz:>12}"
            )
        return "\n".join(lines)


def _nice_time(value_ns: float) -> tuple[float, str]:
    for unit, factor in (("us", 1e3), ("ns", 1.0), ("ps", 1e-3), ("fs", 1e-6)):
        if abs(value_ns) >= factor:
            return value_ns / factor, unit
    return value_ns / 1e-6, "fs"


def _nice_energy(value_uev: float) -> tuple[float, str]:
    for unit, factor in (("eV", 1e6), ("meV", 1e3), ("ueV", 1.0), ("neV", 1e-3)):
        if abs(value_uev) >= factor:
            return value_uev / factor, unit
    return value_uev / 1e-3, "neV"


# Default operating table: typical excitonic transport scales at 300 K.
DEFAULT_OPERATING_TABLE = (
    TargetQuantity("simulation time, span", 10.0, "ps"),
    TargetQuantity("simulation time, resolution", 2.0, "fs"),
    TargetQuantity("system energy span, max", 125.0, "meV"),
    TargetQuantity("system energy span, resolution", 125.0, "ueV"),
    TargetQuantity("system coupling, max", 25.0, "meV"),
    TargetQuantity("system coupling, resolution", 125.0, "ueV"),
    TargetQuantity("bath frequency, max", 250.0, "meV"),
    TargetQuantity("bath frequency, resolution", 125.0, "ueV"),
    TargetQuantity("reorganization energy, max", 100.0, "meV"),
    TargetQuantity("reorganization energy, resolution", 125.0, "ueV"),
)


def scale_report(
    spec: "MappingSpec | float",
    target_quantities: Sequence[TargetQuantity] | None = None,
) -> ScaleReport:
    """Translate target-frame quantities to the simulator frame.

    Times stretch by gamma, energies shrink by 1/gamma; energies also
    get an E/h frequency rendering.  Accepts a MappingSpec or a bare
    gamma ratio.
    """
    gamma = spec.gamma_ratio if isinstance(spec, MappingSpec) else float(spec)
    if gamma <= 0:
        raise ValueError("gamma_ratio must be positive")
    if target_quantities is None:
        target_quantities = DEFAULT_OPERATING_TABLE
    rows = []
    for q in target_quantities:
        if q.unit in _TIME_UNITS:
            ns = q.value * _TIME_UNITS[q.unit] * gamma
            val, unit = _nice_time(ns)
            rows.append(ScaleRow(q.label, q.value, q.unit, val, unit, None))
        elif q.unit in _ENERGY_UNITS:
            uev = q.value * _ENERGY_UNITS[q.unit] / gamma
            val, unit = _nice_energy(uev)
            rows.append(ScaleRow(q.label, q.value, q.unit, val, unit, uev_to_ghz(uev)))
        else:
            raise ValueError(f"unknown unit {q.unit!r} for {q.label!r}")
    return ScaleReport(gamma_ratio=gamma, rows=tuple(rows))


def with_operating_point(spec: MappingSpec, sensitivity: float, tunnel_coupling: float) -> MappingSpec:
    """Copy of spec at a different (k_s, t_c) grid point."""
    return replace(spec, sensitivity=sensitivity, tunnel_coupling=tunnel_coupling)
