"""Experiment drivers: target-vs-simulator emulation, noise, sweeps.

The target two-level system evolves under its own bath at temperature
T; the simulator evolves the five-level double-dot model under the
scaled-down bath at T_qs.  Both propagations share one commensurate
time grid, so traces compare sample-by-sample without interpolation.
"""

from __future__ import annotations

import concurrent.futures
import csv as _csv
import dataclasses
import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import bath as bath_mod
from . import hamiltonians as ham
from . import heom, mapping

DEFAULT_LEVER_ARM = 0.1
# slack when turning t_final/dt into a step count; absorbs the ulp-level
# disagreement between the two frames' ratios
_GRID_SLACK = 1e-12

SWEEP_VARIANTS = ("pristine", "drop-qd-leak", "drop-qbs-leak", "noisy")


class Ablation(enum.Enum):
    """Coupling-removal variants of the five-level simulator."""

    NONE = "none"
    DROP_QD_LEAK = "drop-qd-leak"
    DROP_QBS_LEAK = "drop-qbs-leak"


@dataclass(frozen=True)
class NoiseSpec:
    """Static detuning noise: a Gaussian of width sigma_epsilon (ueV)
    discretized on n_points bins spaced by `spacing` (ueV)."""

    sigma_epsilon: float = 2.0
    n_points: int = 10
    spacing: float = 0.5

    def __post_init__(self):
        if self.sigma_epsilon < 0:
            raise ValueError("sigma_epsilon must be nonnegative")
        if self.n_points < 1:
            raise ValueError("need at least one noise point")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")


def noise_grid(spec: NoiseSpec):
    """Detuning offsets and their Gaussian bin weights.

    Points sit on a centered uniform grid (no privileged zero-noise
    sample when n_points is even); each weight integrates the Gaussian
    over the bin around its point, with the outermost bins extended to
    infinity so the weights sum to one exactly.  sigma_epsilon = 0 is
    the delta-distribution limit: a single pristine point, full weight.
    """
    if spec.sigma_epsilon == 0.0 or spec.n_points == 1:
        return np.array([0.0]), np.array([1.0])
    n = spec.n_points
    offsets = (np.arange(n) - 0.5 * (n - 1)) * spec.spacing
    inner = offsets[:-1] + 0.5 * spec.spacing
    edges = np.concatenate(([-np.inf], inner, [np.inf]))
    z = edges / (spec.sigma_epsilon * math.sqrt(2.0))
    cdf = np.array([0.5 * (1.0 + math.erf(v)) for v in z])
    weights = np.diff(cdf)
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-12:
        raise AssertionError(f"noise weights sum to {total!r}")
    return offsets, weights


@dataclass(frozen=True)
class HeomSettings:
    """Hierarchy truncation, bath expansion order, and time grid.

    t_final_ps is target-frame; dt_ns, when given, is a simulator-frame
    step and must respect the stability bound.
    """

    depth: int = 10
    n_pade: int = 6
    t_final_ps: float = 1.5
    dt_ns: "float | None" = None
    sample_points: int = 1000

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.n_pade < 0:
            raise ValueError("n_pade must be nonnegative")
        if self.t_final_ps <= 0:
            raise ValueError("t_final_ps must be positive")
        if self.dt_ns is not None and self.dt_ns <= 0:
            raise ValueError("dt_ns must be positive")
        if self.sample_points < 2:
            raise ValueError("need at least two sample points")


@dataclass(frozen=True)
class EmulationConfig:
    """One target system plus the simulator meant to reproduce it.

    system and spectral_density are target-frame (ueV); map_spec fixes
    the operating point and the temperature ratio.  coupling_scale
    multiplies the system-bath coupling in both frames (J scales with
    its square); 0 disconnects the bath entirely.
    """

    system: ham.TwoLevelSystem
    spectral_density: bath_mod.DrudeLorentz
    map_spec: mapping.MappingSpec
    settings: HeomSettings = HeomSettings()
    noise: "NoiseSpec | None" = None
    ablation: Ablation = Ablation.NONE
    coupling_scale: float = 1.0

    def __post_init__(self):
        if self.coupling_scale < 0:
            raise ValueError("coupling_scale must be nonnegative")

    @property
    def temperature(self) -> float:
        return self.map_spec.target_temperature

    @property
    def gamma(self) -> float:
        return self.map_spec.gamma_ratio


def paper_operating_config(
    sensitivity: float = 0.6,
    tunnel_coupling: float = 100.0,
    **overrides,
) -> EmulationConfig:
    """Molecular-relaxation benchmark: displaced-oscillator target with
    delta = 10 meV, eta = 5 meV, Drude-Lorentz bath (5 meV, 10 meV),
    300 K target over a 60 mK simulator."""
    system = ham.TwoLevelSystem(
        delta=1.0e4, eta=5.0e3, coupling_kind=ham.CouplingKind.DISPLACED_OSCILLATOR
    )
    sd = bath_mod.DrudeLorentz(lam=5.0e3, omega_c=1.0e4)
    spec = mapping.MappingSpec(
        target_temperature=300.0,
        simulator_temperature=0.06,
        sensitivity=sensitivity,
        tunnel_coupling=tunnel_coupling,
    )
    return EmulationConfig(system=system, spectral_density=sd, map_spec=spec, **overrides)


def derive_dqd(
    config: EmulationConfig,
    detuning_offset: float = 0.0,
    lever_arm: float = DEFAULT_LEVER_ARM,
):
    """Controls and double-dot parameters that realize the target qubit.

    The static charge offset and the coupling normalization kappa are
    fixed at the nominal operating point; a detuning offset perturbs
    only the electrostatic detuning, leaving t_c, B_avg, Delta_B and
    the charge compensation untouched.  Returns (fields, params, kappa).
    """
    sysm = config.system
    fields = mapping.control_fields(config.map_spec, sysm.delta, sysm.eta)
    theta0 = ham.mixing_angle(fields.detuning, config.map_spec.tunnel_coupling)
    delta_q, kappa = ham.choose_delta_q(sysm.coupling_kind, lever_arm, theta0)
    params = ham.DqdParameters(
        detuning=fields.detuning + detuning_offset,
        tunnel_coupling=config.map_spec.tunnel_coupling,
        b_avg=fields.b_avg,
        delta_b=fields.delta_b,
        g_factor=config.map_spec.g_factor,
        lever_arm=lever_arm,
        delta_q=delta_q,
    )
    return fields, params, kappa


def _simulator_matrices(config: EmulationConfig, detuning_offset: float):
    """Five-level Hamiltonian and normalized coupling matrix, ablated."""
    _, params, kappa = derive_dqd(config, detuning_offset)
    m = ham.build_dqd(params)
    h5 = np.array(m.h_qd, dtype=float)
    c5 = np.array(m.coupling_matrix, dtype=float) / kappa
    if config.ablation is Ablation.DROP_QD_LEAK:
        # magnetic-gradient couplings out of the subspace: T+ to both
        # singlets, T- to S1; the subspace element (T-, S0) stays
        for i, j in ((0, 3), (0, 4), (2, 4)):
            h5[i, j] = 0.0
            h5[j, i] = 0.0
    elif config.ablation is Ablation.DROP_QBS_LEAK:
        c5[3, 4] = 0.0
        c5[4, 3] = 0.0
    return h5, c5


def _scale_decomposition(dec, scale):
    if scale == 1.0:
        return dec
    s2 = scale * scale
    return bath_mod.ExponentialBathDecomposition(
        terms=tuple((c * s2, nu) for c, nu in dec.terms),
        delta_strength=dec.delta_strength * s2,
    )


def _target_decomposition(config: EmulationConfig):
    bc = bath_mod.BathCorrelation(config.spectral_density, config.temperature)
    dec = bath_mod.pade_decompose(bc, config.settings.n_pade)
    return _scale_decomposition(dec, config.coupling_scale)


def _simulator_decomposition(config: EmulationConfig):
    sd = config.spectral_density
    g = config.gamma
    scaled = bath_mod.DrudeLorentz(lam=sd.lam / g, omega_c=sd.omega_c / g)
    bc = bath_mod.BathCorrelation(scaled, config.map_spec.simulator_temperature)
    dec = bath_mod.pade_decompose(bc, config.settings.n_pade)
    return _scale_decomposition(dec, config.coupling_scale)


@dataclass(frozen=True)
class TimeGrid:
    """Step counts and sizes shared by the two frames."""

    n_steps: int
    dt_sim: float
    dt_target: float
    t_final_sim: float
    t_final_target: float


def time_grid(config: EmulationConfig) -> TimeGrid:
    """Commensurate step sizes for target and simulator propagation.

    Both runs take exactly n_steps, so samples land on the same
    target-frame instants.  The step honors the stability bound of
    every run the config implies: the target, the pristine simulator,
    and each noise offset when noise is configured.
    """
    g = config.gamma
    t_final_target = config.settings.t_final_ps * 1e-3
    t_final_sim = g * t_final_target
    sim_dec = _simulator_decomposition(config)
    tgt_dec = _target_decomposition(config)
    offsets = [0.0]
    if config.noise is not None:
        offsets = sorted(set(float(o) for o in noise_grid(config.noise)[0]) | {0.0})
    bound = math.inf
    for off in offsets:
        h5, _ = _simulator_matrices(config, off)
        bound = min(bound, heom.dt_bound(h5, sim_dec))
    h2, _ = ham.build_two_level(
        config.system.delta, config.system.eta, config.system.coupling_kind
    )
    bound = min(bound, g * heom.dt_bound(h2, tgt_dec))
    if config.settings.dt_ns is not None:
        bound = min(bound, config.settings.dt_ns)
    n = max(1, math.ceil(t_final_sim / bound - _GRID_SLACK))
    return TimeGrid(
        n_steps=n,
        dt_sim=t_final_sim / n,
        dt_target=t_final_target / n,
        t_final_sim=t_final_sim,
        t_final_target=t_final_target,
    )


def run_target(config: EmulationConfig, *, return_state: bool = False):
    """Relaxation of the bare target system under its own bath.

    Two-level HEOM at the target temperature from the excited state;
    the trace carries physical picoseconds in times_target_ps.
    """
    sysm = config.system
    h2, s2 = ham.build_two_level(sysm.delta, sysm.eta, sysm.coupling_kind)
    dec = _target_decomposition(config)
    rho0 = np.zeros((2, 2), dtype=complex)
    rho0[1, 1] = 1.0
    problem = heom.HeomProblem(
        h_sys=h2,
        coupling_op=s2,
        decomposition=dec,
        depth=config.settings.depth,
        rho0=rho0,
    )
    grid = time_grid(config)
    return heom.propagate(
        problem,
        grid.t_final_target,
        grid.dt_target,
        gamma_ratio=1.0,
        subspace=(0, 1),
        labels=("g", "e"),
        sample_points=config.settings.sample_points,
        return_state=return_state,
    )


# order of the retained levels when T0 is dropped
_REDUCED = (0, 2, 3, 4)


def _embed_t0(trace: heom.Trace) -> heom.Trace:
    """Put the decoupled-by-construction T0 column back into a trace."""
    obs = {}
    for name, series in trace.observables.items():
        obs[name] = series
        if name == "pop_" + ham.BASIS_LABELS[0]:
            obs["pop_" + ham.BASIS_LABELS[1]] = np.zeros_like(np.asarray(series))
    return heom.Trace(
        times_ns=trace.times_ns,
        times_target_ps=trace.times_target_ps,
        observables=obs,
        subspace_rho=trace.subspace_rho,
        labels=tuple(ham.BASIS_LABELS),
        metadata=dict(trace.metadata),
    )


def run_simulator(
    config: EmulationConfig,
    *,
    detuning_offset: float = 0.0,
    keep_all_levels: bool = False,
    return_state: bool = False,
):
    """Five-level double-dot emulation under the scaled bath.

    Starts from the S0 image of the excited state.  The T0 level never
    couples in this field geometry, so by default it is dropped from
    the hierarchy and re-embedded as a zero population column;
    keep_all_levels forces the full five-level propagation.
    """
    h5, c5 = _simulator_matrices(config, detuning_offset)
    dec = _simulator_decomposition(config)
    grid = time_grid(config)
    if keep_all_levels:
        h, c = h5, c5
        subspace = (ham.IDX_TMINUS, ham.IDX_S0)
        labels = ham.BASIS_LABELS
    else:
        off_h = float(np.abs(h5[1, :]).sum() - abs(h5[1, 1]))
        off_c = float(np.abs(c5[1, :]).sum() - abs(c5[1, 1]))
        if off_h != 0.0 or off_c != 0.0:
            raise AssertionError("T0 unexpectedly coupled; use keep_all_levels")
        keep = np.array(_REDUCED)
        h = h5[np.ix_(keep, keep)]
        c = c5[np.ix_(keep, keep)]
        subspace = (1, 2)
        labels = tuple(ham.BASIS_LABELS[i] for i in _REDUCED)
    nlev = h.shape[0]
    rho0 = np.zeros((nlev, nlev), dtype=complex)
    rho0[subspace[1], subspace[1]] = 1.0
    problem = heom.HeomProblem(
        h_sys=h,
        coupling_op=c,
        decomposition=dec,
        depth=config.settings.depth,
        rho0=rho0,
    )
    out = heom.propagate(
        problem,
        grid.t_final_sim,
        grid.dt_sim,
        gamma_ratio=config.gamma,
        subspace=subspace,
        labels=labels,
        sample_points=config.settings.sample_points,
        return_state=return_state,
    )
    trace = out[0] if return_state else out
    if not keep_all_levels:
        trace = _embed_t0(trace)
    trace.metadata["detuning_offset_uev"] = float(detuning_offset)
    trace.metadata["ablation"] = config.ablation.value
    if return_state:
        return trace, out[1]
    return trace


# hierarchy truncation lets spectator populations dip slightly negative,
# so a subspace block can carry marginally more than unit trace
_TRACE_SLACK = 1e-2


def _as_state(rho) -> np.ndarray:
    m = np.asarray(rho, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("fidelity expects 2x2 density matrices")
    scale = max(float(np.abs(m).max()), 1.0)
    if float(np.abs(m - m.conj().T).max()) > 1e-8 * scale:
        raise ValueError("density matrix is not Hermitian")
    m = 0.5 * (m + m.conj().T)
    tr = float(np.trace(m).real)
    if tr <= 0.0:
        raise ValueError("density matrix has nonpositive trace")
    if tr > 1.0 + _TRACE_SLACK:
        raise ValueError(f"density matrix trace {tr!r} exceeds one")
    m = m / tr
    w = np.linalg.eigvalsh(m)
    if float(w.min()) < -1e-9:
        raise ValueError(f"density matrix has negative weight {w.min():.3g}")
    return m


def fidelity(rho_a, rho_b) -> float:
    """Uhlmann fidelity of two qubit states, in [0, 1].

    Both inputs may be sub-normalized subspace blocks; they are
    renormalized to unit trace first.  For 2x2 states the Uhlmann
    formula reduces to tr(a b) + 2 sqrt(det a det b), which is exact
    and numerically stable near 1.
    """
    a = _as_state(rho_a)
    b = _as_state(rho_b)
    overlap = float(np.trace(a @ b).real)
    det_a = float(a[0, 0].real * a[1, 1].real - abs(a[0, 1]) ** 2)
    det_b = float(b[0, 0].real * b[1, 1].real - abs(b[0, 1]) ** 2)
    f = overlap + 2.0 * math.sqrt(max(det_a, 0.0) * max(det_b, 0.0))
    if f > 1.0 + 1e-6:
        raise AssertionError(f"fidelity {f!r} escaped [0, 1]")
    return min(max(f, 0.0), 1.0)


@dataclass
class ComparisonResult:
    """Sample-by-sample comparison of a target and a simulator trace.

    times_ps is the shared target-frame grid.  metadata carries the
    subspace trace norms that were divided out before the fidelity
    (keys subspace_trace_target / subspace_trace_sim) plus run info.
    """

    times_ps: np.ndarray
    fidelity_series: np.ndarray
    min_fidelity: float
    sigma_z_target: np.ndarray
    sigma_z_sim: np.ndarray
    leakage_series: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def max_leakage(self) -> float:
        return float(np.max(self.leakage_series))

    def summary(self) -> dict:
        out = {
            "min_fidelity": self.min_fidelity,
            "max_leakage": self.max_leakage,
            "final_fidelity": float(self.fidelity_series[-1]),
            "n_samples": int(self.times_ps.size),
        }
        for key in (
            "runtime_s",
            "hierarchy_size",
            "target_config_hash",
            "simulator_config_hash",
            "ablation",
            "noise_offsets_uev",
            "noise_weights",
        ):
            if key in self.metadata:
                out[key] = self.metadata[key]
        return out

    def to_csv(self, path) -> None:
        norm_t = self.metadata.get("subspace_trace_target")
        norm_s = self.metadata.get("subspace_trace_sim")
        cols = [
            "time_target_ps",
            "fidelity",
            "sigma_z_target",
            "sigma_z_sim",
            "leakage",
            "subspace_trace_target",
            "subspace_trace_sim",
        ]
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(cols)
            for i in range(self.times_ps.size):
                writer.writerow(
                    [
                        repr(float(self.times_ps[i])),
                        repr(float(self.fidelity_series[i])),
                        repr(float(self.sigma_z_target[i])),
                        repr(float(self.sigma_z_sim[i])),
                        repr(float(self.leakage_series[i])),
                        repr(float(norm_t[i]) if norm_t is not None else 1.0),
                        repr(float(norm_s[i]) if norm_s is not None else 1.0),
                    ]
                )


def compare(target: heom.Trace, simulator: heom.Trace) -> ComparisonResult:
    """Uhlmann fidelity between two traces on a shared time grid.

    Requires commensurate runs: identical target-frame sample instants
    to a relative 1e-9 (no interpolation is ever attempted).
    """
    ta = np.asarray(target.times_target_ps, dtype=float)
    tb = np.asarray(simulator.times_target_ps, dtype=float)
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=1e-9, atol=1e-12):
        raise ValueError("sample grids differ; rerun both with a shared grid")
    n = ta.size
    fid = np.empty(n)
    norm_t = np.empty(n)
    norm_s = np.empty(n)
    for i in range(n):
        bt = target.subspace_rho[i]
        bs = simulator.subspace_rho[i]
        norm_t[i] = float(np.trace(bt).real)
        norm_s[i] = float(np.trace(bs).real)
        fid[i] = fidelity(bt, bs)
    metadata = {
        "subspace_trace_target": norm_t,
        "subspace_trace_sim": norm_s,
        "target_config_hash": target.metadata.get("config_hash"),
        "simulator_config_hash": simulator.metadata.get("config_hash"),
        "hierarchy_size": simulator.metadata.get("n_ados"),
        "runtime_s": float(
            target.metadata.get("runtime_s", 0.0)
            + simulator.metadata.get("runtime_s", 0.0)
        ),
        "ablation": simulator.metadata.get("ablation"),
    }
    return ComparisonResult(
        times_ps=ta.copy(),
        fidelity_series=fid,
        min_fidelity=float(fid.min()),
        sigma_z_target=np.asarray(target.observables["sigma_z"], dtype=float).copy(),
        sigma_z_sim=np.asarray(simulator.observables["sigma_z"], dtype=float).copy(),
        leakage_series=np.asarray(simulator.observables["leakage"], dtype=float).copy(),
        metadata=metadata,
    )


def _average_traces(traces, weights) -> heom.Trace:
    """Weighted mixture of aligned traces.

    Populations, sigma_z and leakage are linear in the state and
    average directly; the normalized inversion and the coherence
    magnitude are recomputed from the averaged subspace block.
    """
    t0 = traces[0]
    for t in traces[1:]:
        if not np.array_equal(t.times_ns, t0.times_ns):
            raise AssertionError("noise-point traces landed on different grids")
    w = np.asarray(weights, dtype=float)
    block = np.zeros_like(t0.subspace_rho)
    for wi, t in zip(w, traces):
        block += wi * t.subspace_rho
    obs = {}
    for name in t0.observables:
        if name == "sigma_z_normalized":
            tr = np.clip((block[:, 0, 0] + block[:, 1, 1]).real, 1e-300, None)
            obs[name] = (block[:, 1, 1] - block[:, 0, 0]).real / tr
        elif name == "coherence_abs":
            obs[name] = np.abs(block[:, 0, 1])
        else:
            acc = np.zeros(t0.times_ns.size)
            for wi, t in zip(w, traces):
                acc += wi * np.asarray(t.observables[name], dtype=float)
            obs[name] = acc
    metadata = dict(t0.metadata)
    metadata["noise_average"] = True
    metadata["runtime_s"] = float(
        sum(t.metadata.get("runtime_s", 0.0) for t in traces)
    )
    return heom.Trace(
        times_ns=t0.times_ns,
        times_target_ps=t0.times_target_ps,
        observables=obs,
        subspace_rho=block,
        labels=t0.labels,
        metadata=metadata,
    )


@dataclass
class NoiseAverageResult:
    """Averaged trace plus its comparison against the target run."""

    trace: heom.Trace
    comparison: ComparisonResult
    offsets: np.ndarray
    weights: np.ndarray
    point_traces: "list | None" = None


def noise_average(
    config: EmulationConfig,
    *,
    target_trace: "heom.Trace | None" = None,
    keep_points: bool = False,
    threads: int = 1,
) -> NoiseAverageResult:
    """Gaussian-weighted mixture of emulations over detuning offsets.

    One five-level run per grid point at detuning + offset; the
    matrices are rebuilt at the perturbed detuning while t_c, B_avg,
    Delta_B and the charge compensation stay nominal.  Density matrices
    are averaged before any metric is computed.
    """
    if config.noise is None:
        raise ValueError("config has no noise specification")
    offsets, weights = noise_grid(config.noise)
    distinct = []
    for off in offsets:
        if float(off) not in distinct:
            distinct.append(float(off))
    runs = {}
    if threads > 1 and len(distinct) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                off: pool.submit(run_simulator, config, detuning_offset=off)
                for off in distinct
            }
            runs = {off: fut.result() for off, fut in futures.items()}
    else:
        for off in distinct:
            runs[off] = run_simulator(config, detuning_offset=off)
    traces = [runs[float(off)] for off in offsets]
    avg = _average_traces(traces, weights)
    if target_trace is None:
        target_trace = run_target(config)
    comp = compare(target_trace, avg)
    comp.metadata["noise_offsets_uev"] = [float(o) for o in offsets]
    comp.metadata["noise_weights"] = [float(v) for v in weights]
    return NoiseAverageResult(
        trace=avg,
        comparison=comp,
        offsets=offsets,
        weights=weights,
        point_traces=traces if keep_points else None,
    )


@dataclass
class EmulationResult:
    """Target run, simulator run (noise-averaged when configured), and
    their comparison."""

    target: heom.Trace
    simulator: heom.Trace
    comparison: ComparisonResult
    noise: "NoiseAverageResult | None" = None


def emulate(config: EmulationConfig, *, threads: int = 1) -> EmulationResult:
    """Full experiment at one operating point."""
    target = run_target(config)
    if config.noise is not None:
        nav = noise_average(config, target_trace=target, threads=threads)
        return EmulationResult(target, nav.trace, nav.comparison, nav)
    sim = run_simulator(config)
    return EmulationResult(target, sim, compare(target, sim), None)


@dataclass
class SweepResult:
    """min F(t) heat map over (sensitivity, tunnel coupling) cells."""

    sensitivities: np.ndarray
    tunnel_couplings: np.ndarray
    min_fidelity: np.ndarray
    variant: str
    failures: list
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Matrix with axis headers: first row tunnel couplings (ueV),
        first column sensitivities."""
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(
                ["ks\\tc_uev"] + [repr(float(t)) for t in self.tunnel_couplings]
            )
            for i in range(self.sensitivities.size):
                writer.writerow(
                    [repr(float(self.sensitivities[i]))]
                    + [repr(float(v)) for v in self.min_fidelity[i]]
                )


def read_sweep_csv(path) -> SweepResult:
    """Rebuild a SweepResult matrix from its CSV form."""
    with open(path, newline="") as fh:
        rows = list(_csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "ks\\tc_uev":
        raise ValueError("not a sweep matrix: missing axis header")
    tc = np.array([float(v) for v in rows[0][1:]])
    ks = np.array([float(r[0]) for r in rows[1:]])
    data = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return SweepResult(
        sensitivities=ks,
        tunnel_couplings=tc,
        min_fidelity=data,
        variant="unknown",
        failures=[],
    )


def _cell_config(config: EmulationConfig, ks: float, tc: float, variant: str):
    spec2 = mapping.with_operating_point(config.map_spec, ks, tc)
    if variant == "pristine":
        abl, noise = Ablation.NONE, None
    elif variant == "drop-qd-leak":
        abl, noise = Ablation.DROP_QD_LEAK, None
    elif variant == "drop-qbs-leak":
        abl, noise = Ablation.DROP_QBS_LEAK, None
    else:
        abl = Ablation.NONE
        noise = config.noise if config.noise is not None else NoiseSpec()
    return dataclasses.replace(
        config, map_spec=spec2, ablation=abl, noise=noise
    )


def sweep(
    config: EmulationConfig,
    sensitivities,
    tunnel_couplings,
    *,
    variant: str = "pristine",
    threads: int = 1,
) -> SweepResult:
    """min F(t) over a grid of operating points.

    Cells run independently; a failing cell is recorded in .failures
    and left NaN.  The target run is shared between all cells that land
    on the same time grid.  variant picks pristine, one of the two
    coupling ablations, or the Gaussian-noise average.
    """
    if variant not in SWEEP_VARIANTS:
        raise ValueError(f"variant must be one of {SWEEP_VARIANTS}")
    ks_arr = np.array(sorted(float(v) for v in np.atleast_1d(sensitivities)))
    tc_arr = np.array(sorted(float(v) for v in np.atleast_1d(tunnel_couplings)))
    if ks_arr.size == 0 or tc_arr.size == 0:
        raise ValueError("sweep grid is empty")
    t_start = time.perf_counter()
    cells = [(i, j) for i in range(ks_arr.size) for j in range(tc_arr.size)]
    cfgs = {
        (i, j): _cell_config(config, ks_arr[i], tc_arr[j], variant) for i, j in cells
    }
    # one target run per distinct time grid, computed up front so the
    # worker pool only ever reads the cache
    target_cache = {}
    grid_keys = {}
    for ij in cells:
        grid = time_grid(cfgs[ij])
        key = (grid.n_steps, grid.dt_target)
        grid_keys[ij] = key
        if key not in target_cache:
            target_cache[key] = run_target(cfgs[ij])

    def run_cell(ij):
        cfg = cfgs[ij]
        target = target_cache[grid_keys[ij]]
        if variant == "noisy":
            return noise_average(cfg, target_trace=target).comparison
        sim = run_simulator(cfg)
        return compare(target, sim)

    values = np.full((ks_arr.size, tc_arr.size), np.nan)
    failures = []
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {ij: pool.submit(run_cell, ij) for ij in cells}
            results = {}
            for ij, fut in futures.items():
                try:
                    results[ij] = fut.result()
                except Exception as exc:
                    failures.append((ij[0], ij[1], f"{type(exc).__name__}: {exc}"))
            for ij, comp in results.items():
                values[ij] = comp.min_fidelity
    else:
        for ij in cells:
            try:
                values[ij] = run_cell(ij).min_fidelity
            except Exception as exc:
                failures.append((ij[0], ij[1], f"{type(exc).__name__}: {exc}"))
    metadata = {
        "variant": variant,
        "depth": config.settings.depth,
        "n_pade": config.settings.n_pade,
        "t_final_ps": config.settings.t_final_ps,
        "runtime_s": time.perf_counter() - t_start,
        "n_failures": len(failures),
    }
    return SweepResult(
        sensitivities=ks_arr,
        tunnel_couplings=tc_arr,
        min_fidelity=values,
        variant=variant,
        failures=failures,
        metadata=metadata,
    )
