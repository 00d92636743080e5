"""Bath spectral densities, correlation functions, and their exponential form.

A bath is specified by a spectral density J(E) in ueV over energy E in
ueV and a temperature in kelvin.  The correlation function

    C(t) = integral_0^inf dE J(E) [coth(E / 2 k_B T) cos(E t / hbar)
                                   - i sin(E t / hbar)]

has units of ueV^2 with t in ns.  For an ohmic density with a
Drude-Lorentz cutoff, C(t) admits an exact sum-over-poles form whose
Matsubara part is accelerated here by a diagonal Pade resummation of
the Bose function.  The hierarchy engine consumes that exponential
form; everything else in this module exists to validate it or to feed
the circuit-synthesis pipeline.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad, simpson, trapezoid
from scipy.special import sici

from .units import E_CHARGE, HBAR, HBAR_SI, KB, UEV_TO_J

# Finite upper limit, in units of max(omega_c, kT), used to regularize
# the logarithmically divergent Re C(0) of a 1/E-tailed density.  All
# quadrature rules share it; the analytic tail beyond it is exact.
UV_CUTOFF_FACTOR = 400.0

DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Raised when a correlation integral fails to converge."""


@dataclass(frozen=True)
class DrudeLorentz:
    """J(E) = (2 lam / pi) omega_c E / (E^2 + omega_c^2); lam, omega_c in ueV."""

    lam: float
    omega_c: float

    def __post_init__(self):
        if self.lam <= 0 or self.omega_c <= 0:
            raise ValueError("lam and omega_c must be positive")


@dataclass(frozen=True)
class Tabulated:
    """Sampled density on an increasing energy grid; linear interpolation, zero outside."""

    omega: np.ndarray
    j: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        j = np.asarray(self.j, dtype=float)
        if omega.ndim != 1 or omega.shape != j.shape or omega.size < 2:
            raise ValueError("grid and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(omega) <= 0) or omega[0] < 0:
            raise ValueError("energy grid must be strictly increasing and nonnegative")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "j", j)


@dataclass(frozen=True)
class RlcSynthesized:
    """Density realized by an RLC ladder; see qbs.qbs_to_spectral_density.

    kappa is the effective gate charge in coulombs, gamma_ratio the
    temperature ratio linking the target energy axis to circuit
    frequencies.
    """

    design: object  # qbs.QbsDesign; kept loose to avoid a circular import
    kappa: float
    gamma_ratio: float


SpectralDensity = Union[DrudeLorentz, Tabulated, RlcSynthesized]


@dataclass(frozen=True)
class BathCorrelation:
    """A spectral density together with the bath temperature in kelvin."""

    spectral_density: SpectralDensity
    temperature: float

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


def evaluate_spectral_density(sd: SpectralDensity, omega):
    """J(omega) in ueV at energy omega in ueV (scalar or array, omega >= 0)."""
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    if isinstance(sd, DrudeLorentz):
        out = (2.0 * sd.lam / np.pi) * sd.omega_c * omega_arr / (omega_arr**2 + sd.omega_c**2)
    elif isinstance(sd, Tabulated):
        out = np.interp(omega_arr, sd.omega, sd.j, left=0.0, right=0.0)
    elif isinstance(sd, RlcSynthesized):
        from . import qbs  # deferred: qbs imports this module

        zre = qbs.design_impedance_real(sd.design, omega_arr / sd.gamma_ratio)
        out = sd.kappa**2 / (np.pi * HBAR_SI) * omega_arr * zre
    else:
        raise TypeError(f"unknown spectral density kind {type(sd).__name__}")
    return out if np.ndim(omega) else float(out)


def tabulate(sd: SpectralDensity, grid) -> Tabulated:
    """Sample any density onto an explicit grid."""
    grid = np.asarray(grid, dtype=float)
    return Tabulated(grid, evaluate_spectral_density(sd, grid))


# ---------------------------------------------------------------------------
# Correlation function by direct quadrature (the reference oracle)


def _dl_integrand(sd: DrudeLorentz, kt: float):
    pref = 2.0 * sd.lam * sd.omega_c / np.pi

    def f(e):
        if e < 1e-12 * sd.omega_c:
            # coth limit: J(E) coth(E/2kT) -> (2 lam omega_c / pi) (2 kT) / omega_c^2
            return pref * 2.0 * kt / sd.omega_c**2
        return pref * e / (e * e + sd.omega_c**2) / np.tanh(e / (2.0 * kt))

    return f


def _gauss_panels(f, a: float, b: float, n_panels: int, order: int = 16) -> float:
    nodes, wts = leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    vals = f(x)
    return float(np.sum(half[:, None] * wts[None, :] * vals))


def _dl_correlation(
    sd: DrudeLorentz, kt: float, t: float, rule: str, abs_tol: float, rel_tol: float
) -> complex:
    cutoff = UV_CUTOFF_FACTOR * max(sd.omega_c, kt)
    f = _dl_integrand(sd, kt)
    pref = 2.0 * sd.lam * sd.omega_c / np.pi

    if rule == "adaptive":
        if t == 0.0:
            re, err = quad(f, 0.0, cutoff, limit=400, epsabs=abs_tol, epsrel=rel_tol)
            _check_quad(re, err, abs_tol, rel_tol)
            return complex(re, 0.0)
        w = t / HBAR

        def j_only(e):
            return pref * e / (e * e + sd.omega_c**2)

        with warnings.catch_warnings():
            # roundoff warnings at this subdivision depth are benign;
            # accuracy is enforced through the returned error estimate
            warnings.simplefilter("ignore")
            re, re_err = quad(f, 0.0, cutoff, weight="cos", wvar=w, limit=2000)
            im, im_err = quad(j_only, 0.0, cutoff, weight="sin", wvar=w, limit=2000)
        si, ci = sici(cutoff * w)
        # beyond the cutoff coth -> 1 and J -> 2 lam omega_c / (pi E)
        re += -pref * ci
        im += pref * (0.5 * np.pi - si)
        _check_quad(re, re_err, abs_tol, rel_tol)
        _check_quad(im, im_err, abs_tol, rel_tol)
        return complex(re, -im)

    if rule == "gauss":
        w = t / HBAR
        n_panels = int(
            np.clip(
                max(4.0 * cutoff / sd.omega_c, cutoff * abs(w) / (0.5 * np.pi)),
                64,
                40000,
            )
        )

        def thermal(x):
            e = np.asarray(x)
            small = e < 1e-12 * sd.omega_c
            esafe = np.where(small, 1.0, e)
            full = pref * esafe / (esafe * esafe + sd.omega_c**2) / np.tanh(esafe / (2.0 * kt))
            return np.where(small, pref * 2.0 * kt / sd.omega_c**2, full)

        re = _gauss_panels(lambda x: thermal(x) * np.cos(w * np.asarray(x)), 0.0, cutoff, n_panels)
        if t == 0.0:
            return complex(re, 0.0)

        def fj(x):
            e = np.asarray(x)
            return pref * e / (e * e + sd.omega_c**2) * np.sin(w * e)

        im = _gauss_panels(fj, 0.0, cutoff, n_panels)
        si, ci = sici(cutoff * w)
        re += -pref * ci
        im += pref * (0.5 * np.pi - si)
        return complex(re, -im)

    raise ValueError(f"unknown quadrature rule {rule!r}")


def _check_quad(value: float, err: float, abs_tol: float, rel_tol: float):
    # the adaptive routine reports its own error estimate; 1e4 headroom
    # accounts for its pessimism on oscillatory weights
    if not np.isfinite(value):
        raise QuadratureError("correlation quadrature returned a non-finite value")
    if err > 1e4 * max(abs_tol, rel_tol * abs(value), 1e-14):
        raise QuadratureError(
            f"correlation quadrature did not converge: estimate {value:.6g}, error {err:.2g}"
        )


def _tabulated_correlation(tab: Tabulated, kt: float, t: float, rule: str) -> complex:
    e = tab.omega
    j = tab.j
    w = t / HBAR
    coth = np.empty_like(e)
    pos = e > 0
    coth[pos] = 1.0 / np.tanh(e[pos] / (2.0 * kt))
    if not pos.all():
        # J(E) coth(E/2kT) -> 2 kT J'(0) as E -> 0; estimate the slope
        # from the first positive node
        i1 = int(np.argmax(pos))
        coth[~pos] = 0.0
    fr = j * coth * np.cos(w * e)
    if not pos.all():
        fr[~pos] = 2.0 * kt * (j[i1] / e[i1]) if e[i1] > 0 else 0.0
    fi = j * np.sin(w * e)
    integ = trapezoid if rule == "adaptive" else simpson
    return complex(integ(fr, e), -integ(fi, e))


def correlation_quadrature(
    bc: BathCorrelation,
    t: float,
    *,
    rule: str = "adaptive",
    abs_tol: float = DEFAULT_ABS_TOL,
    rel_tol: float = DEFAULT_REL_TOL,
) -> complex:
    """C(t) by numerical quadrature over the spectral density.

    Two rules are provided so results can be cross-checked: "adaptive"
    uses an adaptive oscillatory-weight scheme (trapezoid on tabulated
    grids), "gauss" composite fixed-order panels (Simpson on tabulated
    grids).  For a Drude-Lorentz density the 1/E ultraviolet tail makes
    Re C(0) diverge logarithmically; it is regularized with a shared
    finite cutoff, and the exact asymptotic tail integrals are added
    back for t > 0.  t may be negative: C(-t) = conj(C(t)).
    """
    if t < 0:
        return np.conj(correlation_quadrature(bc, -t, rule=rule, abs_tol=abs_tol, rel_tol=rel_tol))
    kt = KB * bc.temperature
    sd = bc.spectral_density
    if isinstance(sd, DrudeLorentz):
        return _dl_correlation(sd, kt, t, rule, abs_tol, rel_tol)
    if isinstance(sd, Tabulated):
        return _tabulated_correlation(sd, kt, t, rule)
    if isinstance(sd, RlcSynthesized):
        grid = _rlc_grid(sd)
        return _tabulated_correlation(tabulate(sd, grid), kt, t, rule)
    raise TypeError(f"unknown spectral density kind {type(sd).__name__}")


def _rlc_grid(sd: RlcSynthesized) -> np.ndarray:
    from . import qbs

    energies = [u.omega_j * sd.gamma_ratio for u in sd.design.units]
    widths = [max(u.gamma_j, 1e-6 * u.omega_j) * sd.gamma_ratio for u in sd.design.units]
    hi = max(e + 12 * g for e, g in zip(energies, widths))
    pieces = [np.linspace(0.0, hi, 4001)]
    for e, g in zip(energies, widths):
        pieces.append(np.linspace(max(e - 12 * g, 0.0), e + 12 * g, 801))
    return np.unique(np.concatenate(pieces))


# ---------------------------------------------------------------------------
# Exponential decomposition


@dataclass(frozen=True)
class ExponentialBathDecomposition:
    """C(t) ~ sum_k c_k exp(-nu_k t) plus a residual delta correction.

    c_k in ueV^2, nu_k in 1/ns.  delta_strength is the time integral of
    the unresummed residual, in ueV^2 ns; the propagator folds it in as
    a Markovian closure.
    """

    terms: tuple[tuple[complex, complex], ...]
    delta_strength: float

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def c(self) -> np.ndarray:
        return np.array([ck for ck, _ in self.terms], dtype=complex)

    @property
    def nu(self) -> np.ndarray:
        return np.array([nk for _, nk in self.terms], dtype=complex)

    def evaluate(self, t):
        """Reconstructed C(t) for t >= 0 (scalar or array)."""
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(tt < 0):
            raise ValueError("decomposition evaluation is defined for t >= 0")
        out = (self.c[None, :] * np.exp(-np.outer(tt, self.nu))).sum(axis=1)
        return out if np.ndim(t) else complex(out[0])

    def spectrum(self, energy):
        """Full Fourier transform C~(E) = 2 Re sum_k c_k / (nu_k - i E/hbar)."""
        e = np.atleast_1d(np.asarray(energy, dtype=float))
        val = 2.0 * np.real(self.c[None, :] / (self.nu[None, :] - 1j * e[:, None] / HBAR)).sum(
            axis=1
        )
        return val if np.ndim(energy) else float(val[0])


def _pade_poles(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pade [n-1/n] poles and zeros of the Bose function, as xi = beta E."""
    b = 1.0 / np.sqrt((2.0 * np.arange(2 * n - 1) + 5.0) * (2.0 * np.arange(2 * n - 1) + 3.0))
    m = np.diag(b, 1)
    ev = np.linalg.eigvalsh(m + m.T)
    eps = np.sort(-2.0 / ev[ev < 0])
    bp = 1.0 / np.sqrt((2.0 * np.arange(2 * n - 2) + 7.0) * (2.0 * np.arange(2 * n - 2) + 5.0))
    mp = np.diag(bp, 1)
    evp = np.linalg.eigvalsh(mp + mp.T)
    chi = np.sort(-2.0 / evp[evp < 0])
    if eps.size != n or chi.size != n - 1:
        raise QuadratureError("Pade pole finding did not converge")
    return eps, chi


def _pade_residues(n: int) -> tuple[np.ndarray, np.ndarray]:
    eps, chi = _pade_poles(n)
    pref = 0.5 * n * (2.0 * (n + 1.0) + 1.0)
    kap = np.empty(n)
    for j in range(n):
        num = np.prod(chi**2 - eps[j] ** 2)
        den = np.prod(np.delete(eps**2 - eps[j] ** 2, j))
        kap[j] = pref * num / den
    return eps, kap


def pade_decompose(bc: BathCorrelation, n_pade: int) -> ExponentialBathDecomposition:
    """Exponential decomposition of a Drude-Lorentz bath correlation.

    Returns 1 + n_pade terms: the Drude pole plus n_pade Pade poles of
    the [n_pade - 1 / n_pade] Bose resummation.  All decay rates are
    real.  delta_strength carries the time integral of the truncated
    remainder, used by the propagator as a Markovian closure; its
    imaginary part cancels identically and is asserted, not stored.
    """
    sd = bc.spectral_density
    if not isinstance(sd, DrudeLorentz):
        raise TypeError("exponential decomposition requires a Drude-Lorentz density")
    if n_pade < 0:
        raise ValueError("n_pade must be >= 0")
    kt = KB * bc.temperature
    beta = 1.0 / kt
    lam, wc = sd.lam, sd.omega_c

    c = [lam * wc * (1.0 / np.tan(0.5 * beta * wc) - 1.0j)]
    nu = [wc / HBAR]
    if n_pade > 0:
        eps, kap = _pade_residues(n_pade)
        for j in range(n_pade):
            pole_e = eps[j] * kt  # pole position as an energy
            c.append(4.0 * lam * wc * kap[j] * pole_e * kt / (pole_e**2 - wc**2))
            nu.append(pole_e / HBAR)
            if abs(pole_e - wc) < 1e-9 * wc:
                raise QuadratureError("Pade pole degenerate with the Drude pole")

    c_arr = np.array(c, dtype=complex)
    nu_arr = np.array(nu, dtype=float)
    # integral of the exact C(t) over t >= 0 is hbar (2 lam kT / omega_c - i lam)
    exact_integral = HBAR * (2.0 * lam * kt / wc)
    delta = exact_integral - float(np.sum(np.real(c_arr) / nu_arr))
    imag_residual = -HBAR * lam - float(np.sum(np.imag(c_arr) / nu_arr))
    if abs(imag_residual) > 1e-9 * max(abs(exact_integral), HBAR * lam):
        raise QuadratureError("imaginary closure residual did not cancel")
    terms = tuple((complex(ck), complex(nk)) for ck, nk in zip(c_arr, nu_arr))
    return ExponentialBathDecomposition(terms=terms, delta_strength=delta)


# ---------------------------------------------------------------------------
# Low/high-frequency splitting


def splitting_function(omega, omega_star: float):
    """Smooth low-pass weight: (1 - (w/w*)^2)^2 below w*, zero above."""
    if omega_star <= 0:
        raise ValueError("omega_star must be positive")
    w = np.asarray(omega, dtype=float)
    s = np.where(w < omega_star, (1.0 - (w / omega_star) ** 2) ** 2, 0.0)
    return s if np.ndim(omega) else float(s)


def split_spectral_density(
    sd: SpectralDensity,
    omega_star: float,
    grid: "np.ndarray | None" = None,
) -> tuple[Tabulated, Tabulated]:
    """Partition J into a slow part J_L = S J and the remainder J_H.

    The slow part is treated as classical detuning noise, the fast part
    goes to the circuit synthesizer.  Both returned densities live on
    the same grid, and J_L + J_H reproduces J there exactly.
    """
    if grid is None:
        if isinstance(sd, Tabulated):
            grid = sd.omega
        elif isinstance(sd, DrudeLorentz):
            hi = max(10.0 * sd.omega_c, 2.0 * omega_star)
            grid = np.linspace(0.0, hi, 4001)
        else:
            grid = _rlc_grid(sd)
    grid = np.asarray(grid, dtype=float)
    j = evaluate_spectral_density(sd, grid)
    s = splitting_function(grid, omega_star)
    return Tabulated(grid, j * s), Tabulated(grid, j * (1.0 - s))


# ---------------------------------------------------------------------------
# Classical detuning-noise correlation of the slow part


@dataclass(frozen=True)
class KappaParams:
    """Gate-coupling bundle: lever arm in eV/V, sensitivity k_s, target factor n.

    n is 1 for a displaced-oscillator target and 2 for spin-boson; the
    effective gate charge is kappa = lever_arm * e * k_s / n coulombs.
    """

    lever_arm: float
    k_s: float
    n: int = 1

    @property
    def kappa_coulomb(self) -> float:
        return self.lever_arm * E_CHARGE * self.k_s / self.n


def classical_noise_correlation(
    j_low: SpectralDensity,
    temperature_qs: float,
    gamma_ratio: float,
    kappa_params: KappaParams,
    t: float,
    *,
    rule: str = "adaptive",
) -> float:
    """Voltage autocorrelation <V(t) V(0)> in V^2 of the slow bath part.

    t is circuit-frame time in ns.  The slow density j_low is given on
    the target energy axis in ueV; the thermal occupation uses the
    circuit temperature, which matches the target temperature once the
    energy axis is scaled by gamma_ratio.  The integrand must vanish at
    zero energy fast enough for the classical (coth) divergence to stay
    integrable; a diverging low-frequency limit is reported as an error.
    """
    if gamma_ratio <= 0 or temperature_qs <= 0:
        raise ValueError("gamma_ratio and temperature_qs must be positive")
    kt_target = gamma_ratio * KB * temperature_qs
    tab = j_low if isinstance(j_low, Tabulated) else tabulate(j_low, np.linspace(0, 100 * kt_target, 8001))
    e = tab.omega
    j = tab.j
    pos = e > 0
    if pos.any():
        i1 = int(np.argmax(pos))
        i2 = min(i1 + 1, e.size - 1)
        # J_L / E must stay bounded as E -> 0
        if j[i1] > 0 and e[i2] > e[i1] and j[i1] / e[i1] > 10.0 * max(j[i2] / e[i2], 1e-300):
            raise ValueError("slow spectral density does not vanish at zero energy")
    coth = np.ones_like(e)
    coth[pos] = 1.0 / np.tanh(e[pos] / (2.0 * kt_target))
    f = j * coth * np.cos(e * t / (gamma_ratio * HBAR))
    if not pos.all():
        f[~pos] = 2.0 * kt_target * (j[i1] / e[i1]) if pos.any() else 0.0
    integ = trapezoid if rule == "adaptive" else simpson
    integral_uev = float(integ(f, e))  # ueV, after the 1/(gamma hbar) measure below
    alpha_c = kappa_params.lever_arm * E_CHARGE
    pref = (HBAR_SI / gamma_ratio) * (kappa_params.n / (alpha_c * kappa_params.k_s)) ** 2
    # measure dOmega = dE / (gamma hbar), converted from 1/ns to 1/s
    return pref * integral_uev * UEV_TO_J * 1e9 / (gamma_ratio * HBAR)


# ---------------------------------------------------------------------------
# Tabulated CSV interchange

CSV_HEADER = ("omega_uev", "j_uev")


def write_tabulated_csv(path, tab: Tabulated) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for w, j in zip(tab.omega, tab.j):
            writer.writerow([repr(float(w)), repr(float(j))])


def read_tabulated_csv(path) -> Tabulated:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != list(CSV_HEADER):
            raise ValueError(f"expected header {','.join(CSV_HEADER)}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    if len(rows) < 2:
        raise ValueError("tabulated density needs at least two rows")
    omega = np.array([r[0] for r in rows])
    j = np.array([r[1] for r in rows])
    return Tabulated(omega, j)
