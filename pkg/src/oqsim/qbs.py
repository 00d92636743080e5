"""RLC bath synthesizer: impedance models, sizing, and spectral fitting.

A synthesizer is a bank of series-wired RLC units.  Each unit
contributes a Lorentzian peak to the real part of the total impedance,

    Re[Z_j](W) = 2 L_j 2 G_j W^2 / ((W_j^2 - W^2)^2 + 4 G_j^2 W^2)

with weight L_j = Z_0j W_j / 2 and width G_j = Z_0j W_j / (2 R_j), so
the peak value at resonance is exactly R_j.  Resonances and widths are
stored as circuit-frame energies in ueV (hbar times the angular
frequency); impedances are in ohms and capacitances in farads.  The
target-frame spectral density seen by the qubit is

    J(E) = kappa^2 / (pi hbar) E Re[Z](E / gamma)

with kappa the effective gate charge in coulombs and gamma the
temperature ratio of the mapping.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from . import bath
from .units import E_CHARGE, HBAR_SI, UEV_TO_J, rad_per_s_to_uev, uev_to_rad_per_s


@dataclass(frozen=True)
class RlcUnit:
    """One RLC oscillator.

    omega_j and gamma_j are the design resonance and half-width as
    circuit-frame energies in ueV; z0 the characteristic impedance of a
    single sub-unit in ohms; series_count identical sub-units are wired
    in series; parasitic_c in farads loads each sub-unit; divider_scale
    in (0, 1] attenuates the delivered Re[Z] (voltage-divider power
    fraction).
    """

    omega_j: float
    z0: float
    gamma_j: float
    series_count: int = 1
    parasitic_c: float = 0.0
    divider_scale: float = 1.0

    def __post_init__(self):
        if self.omega_j <= 0 or self.gamma_j <= 0:
            raise ValueError("omega_j and gamma_j must be positive")
        if self.z0 < 0:
            raise ValueError("z0 must be nonnegative")
        if self.series_count < 1:
            raise ValueError("series_count must be >= 1")
        if self.parasitic_c < 0:
            raise ValueError("parasitic_c must be nonnegative")
        if not 0.0 < self.divider_scale <= 1.0:
            raise ValueError("divider_scale must lie in (0, 1]")

    @property
    def capacitance(self) -> float:
        """C = 1 / (Z_0 W_j) in farads, before parasitic loading."""
        return 1.0 / (self.z0 * uev_to_rad_per_s(self.omega_j))

    @property
    def inductance(self) -> float:
        """L = Z_0 / W_j in henries."""
        return self.z0 / uev_to_rad_per_s(self.omega_j)

    @property
    def resistance(self) -> float:
        """R = Z_0 W_j / (2 G_j) in ohms; equals Re[Z] at resonance."""
        return self.z0 * self.omega_j / (2.0 * self.gamma_j)

    def effective_parameters(self) -> tuple[float, float, float]:
        """(omega, z0, gamma) after parasitic loading, same units as stored.

        The parasitic capacitance adds to C at fixed L and R, which
        lowers both the resonance and the characteristic impedance
        while keeping the on-resonance peak at R.
        """
        if self.parasitic_c == 0.0 or self.z0 == 0.0:
            return self.omega_j, self.z0, self.gamma_j
        l = self.inductance
        c_eff = self.capacitance + self.parasitic_c
        w_eff = 1.0 / math.sqrt(l * c_eff)
        z0_eff = math.sqrt(l / c_eff)
        omega_eff = rad_per_s_to_uev(w_eff)
        gamma_eff = z0_eff * omega_eff / (2.0 * self.resistance)
        return omega_eff, z0_eff, gamma_eff


@dataclass(frozen=True)
class QbsDesign:
    units: tuple[RlcUnit, ...]

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))

    @property
    def divider_scales(self) -> tuple[float, ...]:
        return tuple(u.divider_scale for u in self.units)


@dataclass(frozen=True)
class DeltaWeight:
    """Spectral weight of a lossless LC unit: a delta line at omega0."""

    omega0: float  # ueV
    weight: float  # ohm rad/s


def lc_impedance_real(z0: float, omega0: float) -> DeltaWeight:
    """Delta-function weight pi W_0 Z_0 / 2 of a lossless LC resonance.

    The reactive principal-value part is not evaluated; only the real
    part matters for the synthesized spectral density.
    """
    if z0 < 0 or omega0 <= 0:
        raise ValueError("z0 must be nonnegative and omega0 positive")
    return DeltaWeight(omega0=omega0, weight=0.5 * np.pi * uev_to_rad_per_s(omega0) * z0)


def rlc_impedance_real(unit: RlcUnit, omega):
    """Re[Z](omega) of one unit in ohms, omega a circuit-frame energy in ueV.

    Includes series_count, divider_scale, and parasitic loading.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("omega must be nonnegative")
    wj, z0, gj = unit.effective_parameters()
    lam = 0.5 * z0 * wj
    num = 4.0 * lam * gj * w**2
    den = (wj**2 - w**2) ** 2 + 4.0 * gj**2 * w**2
    out = unit.series_count * unit.divider_scale * num / den
    return out if np.ndim(omega) else float(out)


def design_impedance_real(design: QbsDesign, omega):
    """Total Re[Z](omega) of the bank in ohms (units add in series)."""
    w = np.asarray(omega, dtype=float)
    total = np.zeros_like(w)
    for u in design.units:
        total = total + rlc_impedance_real(u, w)
    return total if np.ndim(omega) else float(total)


def qbs_to_spectral_density(
    design: QbsDesign, kappa: float, gamma_ratio: float
) -> bath.RlcSynthesized:
    """Wrap a design as a target-frame spectral density.

    kappa in coulombs; gamma_ratio maps target energies down to the
    circuit frame before the impedance is evaluated.
    """
    if kappa <= 0 or gamma_ratio <= 0:
        raise ValueError("kappa and gamma_ratio must be positive")
    return bath.RlcSynthesized(design=design, kappa=kappa, gamma_ratio=gamma_ratio)


def size_impedance(huang_rhys: float, lever_arm: float, k_s: float, n: int = 1) -> float:
    """Total characteristic impedance realizing a Huang-Rhys factor.

    Z = 2 hbar s (n / (alpha_C k_s))^2 with alpha_C = lever_arm * e the
    gate charge per volt.  Independent of the temperature ratio.
    """
    if huang_rhys < 0 or lever_arm <= 0 or not 0 < k_s < 1 or n < 1:
        raise ValueError("invalid sizing inputs")
    alpha_c = lever_arm * E_CHARGE
    return 2.0 * HBAR_SI * huang_rhys * (n / (alpha_c * k_s)) ** 2


@dataclass(frozen=True)
class SeriesPlan:
    design: QbsDesign
    infeasible: tuple[int, ...]  # indices of units whose count exceeds the cap


def plan_series_counts(
    design: QbsDesign, max_unit_impedance: float, count_cap: int = 100
) -> SeriesPlan:
    """Split each unit's total impedance across identical series sub-units.

    The input z0 * series_count of each unit is read as the required
    total; the plan chooses the smallest count whose per-sub-unit
    impedance stays at or below max_unit_impedance.  Units needing more
    than count_cap sub-units are flagged, not rejected.
    """
    if max_unit_impedance <= 0:
        raise ValueError("max_unit_impedance must be positive")
    new_units = []
    flagged = []
    for i, u in enumerate(design.units):
        total = u.z0 * u.series_count
        count = max(1, math.ceil(total / max_unit_impedance))
        if count > count_cap:
            flagged.append(i)
        new_units.append(replace(u, z0=total / count, series_count=count))
    return SeriesPlan(design=QbsDesign(tuple(new_units)), infeasible=tuple(flagged))


# ---------------------------------------------------------------------------
# Spectral-density fitting


@dataclass(frozen=True)
class QbsFit:
    design: QbsDesign
    residual_l2: float
    residual_max: float
    peak_target: float
    grid: np.ndarray
    fitted: np.ndarray


def fit_qbs(
    target: bath.SpectralDensity,
    n_units: int,
    band: tuple[float, float],
    *,
    gamma_uev: float,
    kappa: float,
    gamma_ratio: float,
    grid: "np.ndarray | None" = None,
) -> QbsFit:
    """Nonnegative least-squares fit of a unit bank to a target density.

    Unit resonances sit on a uniform target-frame grid over band
    (endpoints included) with a common width gamma_uev; only the
    characteristic impedances are fitted.  A zero target yields zero
    weights.  band and n_units must describe a nondegenerate layout.
    """
    lo, hi = band
    if not (0.0 < lo < hi):
        raise ValueError("band must satisfy 0 < lo < hi")
    if n_units < 1:
        raise ValueError("n_units must be >= 1")
    if gamma_uev <= 0:
        raise ValueError("gamma_uev must be positive")
    resonances = np.linspace(lo, hi, n_units) if n_units > 1 else np.array([lo])
    if grid is None:
        grid = np.linspace(0.0, 1.05 * hi, 1500)[1:]
    grid = np.asarray(grid, dtype=float)
    if grid.size < n_units:
        raise ValueError("fit grid is degenerate: fewer points than units")

    y = np.asarray(bath.evaluate_spectral_density(target, grid), dtype=float)
    basis = np.empty((grid.size, n_units))
    for j, ej in enumerate(resonances):
        unit = RlcUnit(omega_j=ej / gamma_ratio, z0=1.0, gamma_j=gamma_uev / gamma_ratio)
        zre = rlc_impedance_real(unit, grid / gamma_ratio)
        basis[:, j] = kappa**2 / (np.pi * HBAR_SI) * grid * zre

    coef, rnorm = nnls(basis, y)
    fitted = basis @ coef
    units = tuple(
        RlcUnit(omega_j=ej / gamma_ratio, z0=float(cj), gamma_j=gamma_uev / gamma_ratio)
        for ej, cj in zip(resonances, coef)
    )
    return QbsFit(
        design=QbsDesign(units),
        residual_l2=float(rnorm),
        residual_max=float(np.max(np.abs(fitted - y))),
        peak_target=float(np.max(np.abs(y))) if y.size else 0.0,
        grid=grid,
        fitted=fitted,
    )


# ---------------------------------------------------------------------------
# Interchange formats


def design_to_json(design: QbsDesign) -> str:
    rows = [
        {
            "omega_uev": u.omega_j,
            "z0_ohm": u.z0,
            "gamma_uev": u.gamma_j,
            "series_count": u.series_count,
            "parasitic_f": u.parasitic_c,
            "divider_scale": u.divider_scale,
        }
        for u in design.units
    ]
    return json.dumps(rows, indent=2)


def design_from_json(text: str) -> QbsDesign:
    rows = json.loads(text)
    if not isinstance(rows, list):
        raise ValueError("design JSON must be an array of unit objects")
    units = []
    for row in rows:
        try:
            units.append(
                RlcUnit(
                    omega_j=float(row["omega_uev"]),
                    z0=float(row["z0_ohm"]),
                    gamma_j=float(row["gamma_uev"]),
                    series_count=int(row.get("series_count", 1)),
                    parasitic_c=float(row.get("parasitic_f", 0.0)),
                    divider_scale=float(row.get("divider_scale", 1.0)),
                )
            )
        except KeyError as exc:
            raise ValueError(f"unit entry missing key {exc}") from exc
    return QbsDesign(tuple(units))


def write_design_json(path, design: QbsDesign) -> None:
    with open(path, "w") as fh:
        fh.write(design_to_json(design) + "\n")


def read_design_json(path) -> QbsDesign:
    with open(path) as fh:
        return design_from_json(fh.read())


def export_spectrum_csv(path, sd: bath.SpectralDensity, grid) -> None:
    """Tabulate a density on grid (target-frame ueV) and write the CSV form."""
    bath.write_tabulated_csv(path, bath.tabulate(sd, grid))
