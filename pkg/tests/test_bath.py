"""Spectral densities, correlation quadrature, and the Pade decomposition.

The reference bath throughout is the cryogenic-frame Drude-Lorentz
density (lam = 1 ueV, omega_c = 2 ueV) at 60 mK, whose decomposition
values are frozen below after cross-validation against two independent
quadrature rules.
"""

import math

import numpy as np
import pytest

from oqsim import bath
from oqsim.units import HBAR, KB

SD = bath.DrudeLorentz(1.0, 2.0)
BC = bath.BathCorrelation(SD, 0.06)

# pade_decompose(BC, 6), pinned; the adaptive and gauss quadratures
# agree with the reconstruction to better than 1e-6 relative on
# [0, 3.3] ns (see test_decomposition_matches_quadrature)
FROZEN_C = [
    10.21153813 - 2.0j,
    1.27808362,
    0.63722463,
    0.4273276,
    0.42153375,
    0.77903024,
    2.52410278,
]
FROZEN_NU = [
    3.0385349,
    49.35580508,
    98.71161742,
    148.11992035,
    202.88331406,
    315.88149896,
    914.14290032,
]


def test_drude_lorentz_peak_value():
    # J has its maximum lam/pi at omega = omega_c
    assert bath.evaluate_spectral_density(SD, 2.0) == pytest.approx(
        1.0 / np.pi, rel=1e-14
    )
    grid = np.linspace(0.0, 50.0, 20001)
    j = bath.evaluate_spectral_density(SD, grid)
    assert grid[np.argmax(j)] == pytest.approx(2.0, abs=3e-3)


def test_reorganization_energy_integral():
    # integral of J(w)/w over w >= 0 equals lam exactly
    grid = np.linspace(1e-6, 4000.0, 400001)
    j = bath.evaluate_spectral_density(SD, grid)
    lam = np.trapezoid(j / grid, grid)
    # the 1/w^2 tail above the grid is (2 lam omega_c / pi) / hi
    lam += 2.0 * SD.lam * SD.omega_c / np.pi / grid[-1]
    assert lam == pytest.approx(SD.lam, rel=1e-4)


def test_spectral_density_validation():
    with pytest.raises(ValueError):
        bath.DrudeLorentz(0.0, 1.0)
    with pytest.raises(ValueError):
        bath.DrudeLorentz(1.0, -2.0)
    with pytest.raises(ValueError):
        bath.evaluate_spectral_density(SD, -1.0)
    with pytest.raises(ValueError):
        bath.Tabulated(np.array([0.0, 0.0, 1.0]), np.zeros(3))


def test_tabulated_interpolation_and_range():
    tab = bath.Tabulated(np.array([0.0, 1.0, 2.0]), np.array([0.0, 4.0, 0.0]))
    assert bath.evaluate_spectral_density(tab, 0.5) == pytest.approx(2.0)
    assert bath.evaluate_spectral_density(tab, 5.0) == 0.0


def test_frozen_decomposition_terms():
    dec = bath.pade_decompose(BC, 6)
    assert dec.n_terms == 7
    np.testing.assert_allclose(dec.c, FROZEN_C, rtol=2e-8)
    np.testing.assert_allclose(dec.nu.real, FROZEN_NU, rtol=2e-8)
    assert np.all(dec.nu.imag == 0.0)
    # at this order the Markovian remainder has converged to zero
    assert abs(dec.delta_strength) < 1e-12
    assert dec.evaluate(0.0) == pytest.approx(16.278840748 - 2.0j, rel=1e-8)


def test_markovian_closure_shrinks_with_order():
    deltas = [abs(bath.pade_decompose(BC, n).delta_strength) for n in (0, 1, 2)]
    assert deltas[0] == pytest.approx(0.042540827, rel=1e-6)
    assert all(a > b for a, b in zip(deltas, deltas[1:]))
    # from n = 3 on the residual sits at roundoff
    for n in (3, 4, 5, 6):
        assert abs(bath.pade_decompose(BC, n).delta_strength) < 1e-12


def test_closure_completes_exact_time_integral():
    # sum Re c_k / nu_k + delta = hbar 2 lam kT / omega_c at any order
    exact = HBAR * 2.0 * SD.lam * KB * 0.06 / SD.omega_c
    for n in (0, 2, 6):
        dec = bath.pade_decompose(BC, n)
        total = float(np.sum(dec.c.real / dec.nu.real)) + dec.delta_strength
        assert total == pytest.approx(exact, rel=1e-12)


def test_decomposition_matches_quadrature():
    # independent oracle: adaptive oscillatory quadrature of J itself
    dec = bath.pade_decompose(BC, 6)
    for t in (0.05, 0.3, 1.0, 3.0):
        ref = bath.correlation_quadrature(BC, t)
        rec = dec.evaluate(t)
        assert abs(rec - ref) <= 1e-6 * abs(ref)


def test_quadrature_rules_agree():
    for t in (0.0, 0.05, 1.0, 3.0):
        a = bath.correlation_quadrature(BC, t, rule="adaptive")
        g = bath.correlation_quadrature(BC, t, rule="gauss")
        assert abs(a - g) <= 1e-8 * max(abs(a), 1e-6)
    with pytest.raises(ValueError):
        bath.correlation_quadrature(BC, 1.0, rule="simpson8")


def test_negative_time_conjugate():
    c_pos = bath.correlation_quadrature(BC, 0.7)
    c_neg = bath.correlation_quadrature(BC, -0.7)
    assert c_neg == pytest.approx(np.conj(c_pos), rel=1e-12)


def test_temperature_ratio_scaling_is_exact():
    """Scaling (lam, omega_c, T) by gamma multiplies every amplitude by
    gamma^2 and every rate by gamma, with no other change."""
    g = 5000.0
    hot = bath.pade_decompose(
        bath.BathCorrelation(bath.DrudeLorentz(1.0 * g, 2.0 * g), 0.06 * g), 6
    )
    cold = bath.pade_decompose(BC, 6)
    np.testing.assert_allclose(hot.c, cold.c * g * g, rtol=1e-12)
    np.testing.assert_allclose(hot.nu, cold.nu * g, rtol=1e-12)
    # the residual is roundoff in either frame, so compare it to C(0)
    assert abs(hot.delta_strength) < 1e-12 * abs(hot.evaluate(0.0))
    assert abs(cold.delta_strength) < 1e-12 * abs(cold.evaluate(0.0))


def test_spectrum_identity_and_detailed_balance():
    # full Fourier transform must equal pi hbar J(E) (coth + 1); the
    # Pade form reproduces it to machine precision at moderate E
    dec = bath.pade_decompose(BC, 6)
    kt = KB * 0.06
    for e in (0.5, 1.0, 2.0, 5.0, 10.0):
        exact = np.pi * HBAR * bath.evaluate_spectral_density(SD, e) * (
            1.0 / np.tanh(e / (2.0 * kt)) + 1.0
        )
        assert dec.spectrum(e) == pytest.approx(exact, rel=1e-8)
    ratio = dec.spectrum(-4.0) / dec.spectrum(4.0)
    assert ratio == pytest.approx(math.exp(-4.0 / kt), rel=1e-9)


def test_decomposition_requires_drude_lorentz():
    tab = bath.tabulate(SD, np.linspace(0.0, 20.0, 101))
    with pytest.raises(TypeError):
        bath.pade_decompose(bath.BathCorrelation(tab, 0.06), 6)
    with pytest.raises(ValueError):
        bath.pade_decompose(BC, -1)


def test_tabulated_correlation_tracks_analytic():
    grid = np.linspace(0.0, 820.0, 160001)
    tab = bath.tabulate(SD, grid)
    tbc = bath.BathCorrelation(tab, 0.06)
    for t in (0.1, 0.5):
        ref = bath.correlation_quadrature(BC, t)
        got = bath.correlation_quadrature(tbc, t)
        # the tabulated form misses the tail above the grid, which the
        # analytic path regularizes; agreement is at the percent level
        assert abs(got - ref) <= 2e-2 * abs(ref)


def test_splitting_partition_of_unity(rng):
    omega_star = 7.0
    for _ in range(1000):
        w = rng.uniform(0.0, 30.0)
        s = bath.splitting_function(w, omega_star)
        assert 0.0 <= s <= 1.0
        if w >= omega_star:
            assert s == 0.0
    assert bath.splitting_function(0.0, omega_star) == 1.0


def test_split_reassembles_exactly():
    j_low, j_high = bath.split_spectral_density(SD, 3.0)
    total = j_low.j + j_high.j
    np.testing.assert_allclose(
        total, bath.evaluate_spectral_density(SD, j_low.omega), rtol=1e-14
    )
    above = j_low.omega >= 3.0
    assert np.all(j_low.j[above] == 0.0)
    assert np.any(j_high.j > 0.0)


def test_kappa_params_charge():
    kp = bath.KappaParams(lever_arm=0.1, k_s=0.6, n=1)
    assert kp.kappa_coulomb == pytest.approx(
        0.1 * 1.602176634e-19 * 0.6, rel=1e-12
    )
    assert bath.KappaParams(0.1, 0.6, n=2).kappa_coulomb == pytest.approx(
        0.5 * kp.kappa_coulomb, rel=1e-12
    )


def test_classical_noise_correlation_positive_and_decaying():
    j_low, _ = bath.split_spectral_density(SD, 3.0)
    kp = bath.KappaParams(0.1, 0.6)
    v0 = bath.classical_noise_correlation(j_low, 0.06, 5000.0, kp, 0.0)
    v1 = bath.classical_noise_correlation(j_low, 0.06, 5000.0, kp, 2000.0)
    assert v0 > 0.0
    assert abs(v1) < v0


def test_classical_noise_rejects_gapless_density():
    flat = bath.Tabulated(np.array([0.0, 1.0, 2.0]), np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        bath.classical_noise_correlation(flat, 0.06, 5000.0, bath.KappaParams(0.1, 0.6), 0.0)


def test_tabulated_csv_roundtrip(tmp_path):
    grid = np.linspace(0.0, 11.0, 57)
    tab = bath.tabulate(SD, grid)
    path = tmp_path / "density.csv"
    bath.write_tabulated_csv(path, tab)
    back = bath.read_tabulated_csv(path)
    np.testing.assert_array_equal(back.omega, tab.omega)
    np.testing.assert_array_equal(back.j, tab.j)
    with pytest.raises(ValueError):
        bath.read_tabulated_csv(__file__)
