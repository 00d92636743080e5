"""Target and five-level simulator Hamiltonian construction."""

import numpy as np
import pytest

from oqsim import hamiltonians as ham
from oqsim import mapping
from oqsim.units import MU_B


def test_two_level_matrix_elements():
    h, s = ham.build_two_level(10.0, 3.0, ham.CouplingKind.DISPLACED_OSCILLATOR)
    assert np.array_equal(h, [[-5.0, 3.0], [3.0, 5.0]])
    assert np.array_equal(s, [[0.0, 0.0], [0.0, 1.0]])
    _, s_sb = ham.build_two_level(10.0, 3.0, ham.CouplingKind.SPIN_BOSON)
    assert np.array_equal(s_sb, [[-1.0, 0.0], [0.0, 1.0]])


def test_two_level_eigenvalues():
    # closed form: +- sqrt((delta/2)^2 + eta^2)
    h, _ = ham.build_two_level(8.0, 3.0, ham.CouplingKind.SPIN_BOSON)
    w = np.linalg.eigvalsh(h)
    assert w == pytest.approx([-5.0, 5.0], rel=1e-14)


def test_two_level_rejects_nonfinite():
    with pytest.raises(ValueError):
        ham.build_two_level(np.nan, 1.0, ham.CouplingKind.SPIN_BOSON)
    with pytest.raises(ValueError):
        ham.TwoLevelSystem(1.0, np.inf)


def test_mixing_angle_limits():
    assert ham.mixing_angle(0.0, 50.0) == pytest.approx(np.pi / 4, rel=1e-15)
    assert ham.mixing_angle(-1e9, 50.0) == pytest.approx(np.pi / 2, rel=1e-6)
    assert ham.mixing_angle(1e9, 50.0) == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(ValueError):
        ham.mixing_angle(0.0, 0.0)


def test_mixing_angle_continuous_through_zero():
    left = ham.mixing_angle(-1e-9, 25.0)
    right = ham.mixing_angle(1e-9, 25.0)
    assert abs(left - right) < 1e-10


def test_mixing_angle_matches_sensitivity(rng):
    # k_s = cos^2(theta) ties the two modules together
    for _ in range(1000):
        eps = rng.uniform(-500.0, 500.0)
        tc = rng.uniform(1.0, 200.0)
        theta = ham.mixing_angle(eps, tc)
        assert np.cos(theta) ** 2 == pytest.approx(
            mapping.sensitivity_of(eps, tc), rel=1e-12, abs=1e-15
        )


def test_singlet_energies():
    e0, e1 = ham.singlet_energies(6.0, 4.0)
    assert e0 == pytest.approx(-5.0, rel=1e-14)
    assert e1 == pytest.approx(5.0, rel=1e-14)


def _params(**kw):
    base = dict(
        detuning=40.0,
        tunnel_coupling=100.0,
        b_avg=1.0,
        delta_b=0.04,
        g_factor=2.0,
        lever_arm=0.1,
        delta_q=0.0,
    )
    base.update(kw)
    return ham.DqdParameters(**base)


def test_dqd_is_hermitian_with_decoupled_t0():
    m = ham.build_dqd(_params())
    assert np.array_equal(m.h_qd, m.h_qd.T)
    assert np.array_equal(m.coupling_matrix, m.coupling_matrix.T)
    # T0 couples to nothing in this field geometry, exactly
    off_h = np.abs(m.h_qd[1]).sum() - abs(m.h_qd[1, 1])
    off_c = np.abs(m.coupling_matrix[1]).sum() - abs(m.coupling_matrix[1, 1])
    assert off_h == 0.0
    assert off_c == 0.0


def test_dqd_diagonal_entries():
    p = _params()
    m = ham.build_dqd(p)
    ez = p.g_factor * MU_B * p.b_avg
    assert m.h_qd[0, 0] == pytest.approx(0.5 * p.detuning + ez, rel=1e-14)
    assert m.h_qd[2, 2] == pytest.approx(0.5 * p.detuning - ez, rel=1e-14)
    assert m.h_qd[3, 3] == pytest.approx(m.e_s0, rel=1e-14)
    assert m.h_qd[4, 4] == pytest.approx(m.e_s1, rel=1e-14)
    # gradient couplings share one magnitude split by the mixing angle
    grad = p.g_factor * MU_B * p.delta_b / (2.0 * np.sqrt(2.0))
    st, ct = np.sin(m.mixing_angle), np.cos(m.mixing_angle)
    assert m.h_qd[2, 3] == pytest.approx(grad * st, rel=1e-14)
    assert m.h_qd[0, 4] == pytest.approx(-grad * ct, rel=1e-14)


def test_coupling_matrix_structure():
    p = _params(delta_q=0.03)
    m = ham.build_dqd(p)
    c = m.coupling_matrix
    # triplets share one diagonal value; the only off-diagonal entry
    # connects the singlets
    assert c[0, 0] == c[1, 1] == c[2, 2] == pytest.approx(0.07, rel=1e-14)
    mask = np.ones((5, 5), bool)
    mask[np.diag_indices(5)] = False
    mask[3, 4] = mask[4, 3] = False
    assert np.all(c[mask] == 0.0)
    st, ct = np.sin(m.mixing_angle), np.cos(m.mixing_angle)
    assert c[3, 4] == pytest.approx(p.lever_arm * st * ct, rel=1e-14)


def test_choose_delta_q_displaced_projector():
    # the offset must cancel the triplet diagonal entirely so the
    # normalized subspace coupling is the excited-state projector
    theta = ham.mixing_angle(40.0, 100.0)
    dq, kappa = ham.choose_delta_q(ham.CouplingKind.DISPLACED_OSCILLATOR, 0.1, theta)
    p = _params(delta_q=dq)
    m = ham.build_dqd(p)
    c = m.coupling_matrix / kappa
    assert c[0, 0] == 0.0 and c[2, 2] == 0.0
    assert c[3, 3] == pytest.approx(-1.0, rel=1e-14)


def test_choose_delta_q_spin_boson_symmetric():
    theta = ham.mixing_angle(40.0, 100.0)
    dq, kappa = ham.choose_delta_q(ham.CouplingKind.SPIN_BOSON, 0.1, theta)
    p = _params(delta_q=dq)
    c = ham.build_dqd(p).coupling_matrix / kappa
    assert c[2, 2] == pytest.approx(1.0, rel=1e-12)
    assert c[3, 3] == pytest.approx(-1.0, rel=1e-12)


def test_project_subspace_block():
    p = _params()
    m = ham.build_dqd(p)
    sub = ham.project_subspace(m, p)
    h = m.h_qd
    assert sub.delta_qs == h[3, 3] - h[2, 2]
    assert sub.eta_qs == h[2, 3]
    assert sub.e0 == pytest.approx(0.5 * (h[3, 3] + h[2, 2]), rel=1e-14)


def test_dqd_rejects_nonpositive_tunnel_coupling():
    with pytest.raises(ValueError):
        _params(tunnel_coupling=0.0)
