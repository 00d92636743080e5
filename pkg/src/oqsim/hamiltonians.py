"""Target and simulator Hamiltonians.

The target is a two-level system coupled linearly to a bosonic bath.
The simulator is a two-electron double quantum dot operated in the
five-state space spanned by the polarized triplets, the unpolarized
triplet, and the two hybridized singlets.  Basis order everywhere is

    (T+, T0, T-, S0, S1)

with T- the qubit ground image and S0 the excited image.  Energies are
in ueV, magnetic fields in tesla, the lever arm in eV/V.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .units import MU_B

BASIS_LABELS = ("T+", "T0", "T-", "S0", "S1")

# Subspace indices of the qubit images in the five-level basis.
IDX_TMINUS = 2
IDX_S0 = 3


class CouplingKind(enum.Enum):
    """How the target system couples to its bath.

    SPIN_BOSON couples through sigma_z, DISPLACED_OSCILLATOR through the
    excited-state projector.  The distinction fixes the static charge
    offset of the simulator (see choose_delta_q).
    """

    SPIN_BOSON = "spin_boson"
    DISPLACED_OSCILLATOR = "displaced_oscillator"


@dataclass(frozen=True)
class TwoLevelSystem:
    """Target qubit: H = (delta/2) sigma_z + eta sigma_x, energies in ueV."""

    delta: float
    eta: float
    coupling_kind: CouplingKind = CouplingKind.DISPLACED_OSCILLATOR

    def __post_init__(self):
        if not (np.isfinite(self.delta) and np.isfinite(self.eta)):
            raise ValueError("delta and eta must be finite")


@dataclass(frozen=True)
class DqdParameters:
    """Electrostatic and magnetic controls of the double dot.

    detuning and tunnel_coupling in ueV, fields in tesla, lever_arm in
    eV/V, delta_q as a fraction of the lever arm (same eV/V units).
    """

    detuning: float
    tunnel_coupling: float
    b_avg: float
    delta_b: float
    g_factor: float = 2.0
    lever_arm: float = 0.1
    delta_q: float = 0.0

    def __post_init__(self):
        if self.tunnel_coupling <= 0:
            raise ValueError("tunnel_coupling must be positive")


@dataclass(frozen=True)
class DqdMatrices:
    """Five-level Hamiltonian and charge-coupling matrix (both ueV / lever units)."""

    h_qd: np.ndarray
    coupling_matrix: np.ndarray
    mixing_angle: float
    e_s0: float
    e_s1: float


@dataclass(frozen=True)
class SubspaceHamiltonian:
    """Qubit block of the five-level model in the (T-, S0) subspace.

    delta_qs is the full splitting <S0|H|S0> - <T-|H|T->, eta_qs the
    off-diagonal element, e0 the mean energy of the block.  The embedded
    2x2 Hamiltonian is e0*I + (delta_qs/2) sigma_z + eta_qs sigma_x with
    basis order (ground, excited) = (T-, S0).  coupling_diag holds the
    two diagonal charge couplings (T- entry, S0 entry) before kappa
    normalization.
    """

    delta_qs: float
    eta_qs: float
    e0: float
    coupling_diag: tuple[float, float]


def build_two_level(delta: float, eta: float, coupling_kind: CouplingKind):
    """Return (H, S) for the target qubit in the (ground, excited) basis.

    H = (delta/2) sigma_z + eta sigma_x with sigma_z = |e><e| - |g><g|.
    S is the bath-coupling operator: sigma_z for SPIN_BOSON, the
    excited-state projector |e><e| for DISPLACED_OSCILLATOR.
    """
    if not (np.isfinite(delta) and np.isfinite(eta)):
        raise ValueError("delta and eta must be finite")
    h = np.array([[-0.5 * delta, eta], [eta, 0.5 * delta]], dtype=float)
    if coupling_kind is CouplingKind.SPIN_BOSON:
        s = np.array([[-1.0, 0.0], [0.0, 1.0]])
    elif coupling_kind is CouplingKind.DISPLACED_OSCILLATOR:
        s = np.array([[0.0, 0.0], [0.0, 1.0]])
    else:
        raise ValueError(f"unknown coupling kind {coupling_kind!r}")
    return h, s


def mixing_angle(detuning: float, tunnel_coupling: float) -> float:
    """Singlet hybridization angle theta in radians.

    theta -> pi/2 deep in the (1,1) region (detuning -> -inf), pi/4 at
    zero detuning, -> 0 deep in (0,2).  Continuous across detuning = 0.
    """
    if tunnel_coupling <= 0:
        raise ValueError("tunnel_coupling must be positive")
    # arctan2 keeps the branch continuous through zero detuning, where
    # the two-argument form gives pi/2 and hence theta = pi/4.
    return 0.5 * float(np.arctan2(2.0 * tunnel_coupling, detuning))


def singlet_energies(detuning: float, tunnel_coupling: float) -> tuple[float, float]:
    """Hybridized singlet energies (e_s0, e_s1) relative to the five-level zero."""
    r = np.sqrt(0.25 * detuning**2 + tunnel_coupling**2)
    return -r, r


def build_dqd(params: DqdParameters) -> DqdMatrices:
    """Assemble the five-level Hamiltonian and charge-coupling matrix.

    The Hamiltonian carries the Zeeman ladder of the triplets, the
    hybridized singlet energies, and the field-gradient couplings that
    mix polarized triplets with both singlets.  The coupling matrix is
    the derivative of the five-level energies with respect to gate
    voltage, in lever-arm units (eV/V), minus the static offset delta_q;
    its only off-diagonal entry connects the two singlets.
    """
    eps = params.detuning
    tc = params.tunnel_coupling
    theta = mixing_angle(eps, tc)
    e_s0, e_s1 = singlet_energies(eps, tc)
    ez = params.g_factor * MU_B * params.b_avg
    # Gradient matrix element; the 1/(2 sqrt 2) factor comes from the
    # singlet-triplet overlap of the (1,1) components.
    grad = params.g_factor * MU_B * params.delta_b / (2.0 * np.sqrt(2.0))

    h = np.zeros((5, 5))
    h[0, 0] = 0.5 * eps + ez
    h[1, 1] = 0.5 * eps
    h[2, 2] = 0.5 * eps - ez
    h[3, 3] = e_s0
    h[4, 4] = e_s1

    st, ct = np.sin(theta), np.cos(theta)
    h[0, 3] = h[3, 0] = -grad * st
    h[0, 4] = h[4, 0] = -grad * ct
    h[2, 3] = h[3, 2] = grad * st
    h[2, 4] = h[4, 2] = grad * ct

    alpha = params.lever_arm
    dq = params.delta_q
    m = np.zeros((5, 5))
    m[0, 0] = m[1, 1] = m[2, 2] = alpha - dq
    m[3, 3] = alpha * st**2 - dq
    m[4, 4] = alpha * ct**2 - dq
    m[3, 4] = m[4, 3] = alpha * st * ct

    return DqdMatrices(h_qd=h, coupling_matrix=m, mixing_angle=theta, e_s0=e_s0, e_s1=e_s1)


def choose_delta_q(
    coupling_kind: CouplingKind, lever_arm: float, mixing_angle: float
) -> tuple[float, float]:
    """Static charge offset and coupling normalization for a target kind.

    Returns (delta_q, kappa), both in lever-arm units.  For a displaced
    oscillator target the offset cancels the triplet diagonal entirely,
    leaving the S0 entry at -kappa with kappa = lever_arm cos^2(theta).
    For a spin-boson target the offset centers the qubit block so the
    T- and S0 diagonal couplings are +kappa and -kappa with
    kappa = (lever_arm/2) cos^2(theta).
    """
    ct2 = np.cos(mixing_angle) ** 2
    st2 = np.sin(mixing_angle) ** 2
    if coupling_kind is CouplingKind.DISPLACED_OSCILLATOR:
        delta_q = lever_arm
        kappa = lever_arm * ct2
    elif coupling_kind is CouplingKind.SPIN_BOSON:
        delta_q = 0.5 * lever_arm * (1.0 + st2)
        kappa = 0.5 * lever_arm * ct2
    else:
        raise ValueError(f"unknown coupling kind {coupling_kind!r}")
    return float(delta_q), float(kappa)


def project_subspace(m: DqdMatrices, params: DqdParameters) -> SubspaceHamiltonian:
    """Project the five-level model onto the (T-, S0) qubit block.

    The block reproduces the target form (delta_qs/2) sigma_z +
    eta_qs sigma_x after subtracting the mean energy e0, which is
    reported but never fed back into the dynamics.
    """
    h = m.h_qd
    e_g = h[IDX_TMINUS, IDX_TMINUS]
    e_e = h[IDX_S0, IDX_S0]
    delta_qs = e_e - e_g
    eta_qs = h[IDX_TMINUS, IDX_S0]
    e0 = 0.5 * (e_e + e_g)
    c = m.coupling_matrix
    return SubspaceHamiltonian(
        delta_qs=float(delta_qs),
        eta_qs=float(eta_qs),
        e0=float(e0),
        coupling_diag=(float(c[IDX_TMINUS, IDX_TMINUS]), float(c[IDX_S0, IDX_S0])),
    )
