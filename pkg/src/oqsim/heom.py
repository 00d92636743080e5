"""Hierarchical equations of motion for a single bosonic bath.

Propagates a system density matrix coupled through one Hermitian
operator S to a bath whose correlation function is a sum of
exponentials (bath.ExponentialBathDecomposition).  Auxiliary density
operators are indexed by a multi-index n over the exponential terms
with sum(n) <= depth; the scaled (normalized) convention keeps their
magnitudes comparable across tiers.  The residual delta_strength of the
decomposition enters as a Markovian closure acting at every tier.

Two state representations are used.  When every decay rate nu_k is
real, Hermiticity of each auxiliary operator is preserved exactly, so
the state is stored as N^2 real coordinates per operator (diagonal,
then real/imaginary parts of the upper triangle).  Complex rates fall
back to a complex representation of the same structure.  Both give
bitwise-reproducible traces for a fixed step count.
"""

from __future__ import annotations

import hashlib
import json
import math
import csv as _csv
from time import perf_counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from . import _kernel
from .bath import ExponentialBathDecomposition
from .units import HBAR, KB

DT_SAFETY_FACTOR = 0.1
TRACE_DRIFT_LIMIT = 1e-4
DEFAULT_MEMORY_CAP = 4e9
MAX_HIERARCHY = 10**8


class HeomDivergenceError(RuntimeError):
    """Propagation became unphysical; carries step diagnostics."""

    def __init__(self, message, *, step, time, trace_drift):
        super().__init__(
            f"{message} at step {step}, t = {time:.6g} ns (trace drift {trace_drift:.3e})"
        )
        self.step = step
        self.time = time
        self.trace_drift = trace_drift


def hierarchy_size(n_terms: int, depth: int) -> int:
    """Number of auxiliary operators: binomial(n_terms + depth, depth)."""
    if n_terms < 0 or depth < 0:
        raise ValueError("n_terms and depth must be nonnegative")
    count = math.comb(n_terms + depth, depth)
    if count > MAX_HIERARCHY:
        raise OverflowError(f"hierarchy of {count} operators exceeds the supported size")
    return count


def enumerate_hierarchy(n_terms: int, depth: int):
    """Deterministic multi-index table, tier by tier, lexicographic within a tier."""
    indices = []
    for level in range(depth + 1):
        for combo in combinations_with_replacement(range(n_terms), level):
            n = [0] * n_terms
            for k in combo:
                n[k] += 1
            indices.append(tuple(n))
    position = {n: i for i, n in enumerate(indices)}
    return indices, position


def thermal_expectation(h_sys: np.ndarray, temperature: float) -> np.ndarray:
    """Gibbs state exp(-H / k_B T) / Z."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    h = np.asarray(h_sys, dtype=complex)
    evals, evecs = np.linalg.eigh(h)
    w = np.exp(-(evals - evals.min()) / (KB * temperature))
    w /= w.sum()
    return (evecs * w) @ evecs.conj().T


@dataclass(frozen=True)
class HeomProblem:
    """System, coupling operator, bath decomposition, truncation, initial state."""

    h_sys: np.ndarray
    coupling_op: np.ndarray
    decomposition: ExponentialBathDecomposition
    depth: int
    rho0: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h_sys, dtype=complex)
        s = np.asarray(self.coupling_op, dtype=complex)
        r = np.asarray(self.rho0, dtype=complex)
        n = h.shape[0]
        if h.shape != (n, n) or s.shape != (n, n) or r.shape != (n, n):
            raise ValueError("h_sys, coupling_op, rho0 must be square matrices of equal size")
        scale = max(np.abs(h).max(), 1.0)
        if np.abs(h - h.conj().T).max() > 1e-12 * scale:
            raise ValueError("h_sys must be Hermitian")
        if np.abs(s - s.conj().T).max() > 1e-12 * max(np.abs(s).max(), 1.0):
            raise ValueError("coupling_op must be Hermitian")
        if np.abs(r - r.conj().T).max() > 1e-12:
            raise ValueError("rho0 must be Hermitian")
        if abs(np.trace(r).real - 1.0) > 1e-10:
            raise ValueError("rho0 must have unit trace")
        if np.linalg.eigvalsh(r).min() < -1e-10:
            raise ValueError("rho0 must be positive semidefinite")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        object.__setattr__(self, "h_sys", h)
        object.__setattr__(self, "coupling_op", s)
        object.__setattr__(self, "rho0", r)

    @property
    def dim(self) -> int:
        return self.h_sys.shape[0]


@dataclass(frozen=True)
class HeomState:
    """Snapshot of the full hierarchy; ados maps multi-index to N x N matrix."""

    time: float
    ados: dict

    @property
    def rho(self) -> np.ndarray:
        zero = next(iter(sorted(self.ados, key=sum)))
        return self.ados[zero]


@dataclass
class Trace:
    """Sampled observables of one propagation.

    times_ns is simulator time; times_target_ps the same instants in
    target-frame picoseconds (divided by the gamma passed to
    propagate).  observables maps column name to a real series;
    subspace_rho holds the 2x2 qubit block at each sample.
    """

    times_ns: np.ndarray
    times_target_ps: np.ndarray
    observables: dict
    subspace_rho: np.ndarray  # (n_samples, 2, 2) complex
    labels: tuple
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Write the trace; metadata goes to a '.meta.json' sidecar."""
        cols = ["time_ns", "time_target_ps"] + list(self.observables)
        cols += ["rho_gg", "rho_ee", "rho_ge_re", "rho_ge_im"]
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(cols)
            for i in range(self.times_ns.size):
                row = [repr(float(self.times_ns[i])), repr(float(self.times_target_ps[i]))]
                row += [repr(float(self.observables[name][i])) for name in self.observables]
                blk = self.subspace_rho[i]
                row += [
                    repr(float(blk[0, 0].real)),
                    repr(float(blk[1, 1].real)),
                    repr(float(blk[0, 1].real)),
                    repr(float(blk[0, 1].imag)),
                ]
                writer.writerow(row)
        with open(str(path) + ".meta.json", "w") as fh:
            json.dump(self.metadata, fh, indent=2, default=str)
            fh.write("\n")


def read_trace_csv(path) -> Trace:
    """Rebuild a Trace from its CSV form (metadata sidecar optional)."""
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, [])
        if header[:2] != ["time_ns", "time_target_ps"]:
            raise ValueError("not a trace CSV")
        rows = [list(map(float, r)) for r in reader if r]
    if len(rows) == 0:
        raise ValueError("not a trace CSV")
    data = np.array(rows)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    block_names = ("rho_gg", "rho_ee", "rho_ge_re", "rho_ge_im")
    if not all(b in cols for b in block_names):
        raise ValueError("trace CSV lacks the subspace block columns")
    n = data.shape[0]
    sub = np.zeros((n, 2, 2), dtype=complex)
    sub[:, 0, 0] = cols["rho_gg"]
    sub[:, 1, 1] = cols["rho_ee"]
    sub[:, 0, 1] = cols["rho_ge_re"] + 1j * cols["rho_ge_im"]
    sub[:, 1, 0] = np.conj(sub[:, 0, 1])
    observables = {
        name: cols[name]
        for name in header[2:]
        if name not in block_names
    }
    meta = {}
    try:
        with open(str(path) + ".meta.json") as fh:
            meta = json.load(fh)
    except OSError:
        pass
    labels = tuple(n[4:] for n in observables if n.startswith("pop_"))
    return Trace(
        times_ns=cols["time_ns"],
        times_target_ps=cols["time_target_ps"],
        observables=observables,
        subspace_rho=sub,
        labels=labels,
        metadata=meta,
    )


# ---------------------------------------------------------------------------
# Hermitian-vector representation


def _herm_coords(n: int):
    """Coordinate list: ('d', i) then ('re', i, j) / ('im', i, j) for i < j."""
    coords = [("d", i, i) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            coords.append(("re", i, j))
            coords.append(("im", i, j))
    return coords


def _encode_herm(m: np.ndarray, coords) -> np.ndarray:
    v = np.empty(len(coords))
    for b, (kind, i, j) in enumerate(coords):
        if kind == "d":
            v[b] = m[i, i].real
        elif kind == "re":
            v[b] = m[i, j].real
        else:
            v[b] = m[i, j].imag
    return v

def _decode_herm(v: np.ndarray, coords, n: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    for b, (kind, i, j) in enumerate(coords):
        if kind == "d":
            m[i, i] = v[b]
        elif kind == "re":
            m[i, j] += v[b]
            m[j, i] += v[b]
        else:
            m[i, j] += 1j * v[b]
            m[j, i] += -1j * v[b]
    return m


def _real_superop(f, coords, n: int) -> np.ndarray:
    """Real matrix of a Hermiticity-preserving linear map, in coords."""
    dim = len(coords)
    mat = np.empty((dim, dim))
    for b in range(dim):
        e = np.zeros(dim)
        e[b] = 1.0
        mat[:, b] = _encode_herm(f(_decode_herm(e, coords, n)), coords)
    return mat


def _complex_superop(f, n: int) -> np.ndarray:
    dim = n * n
    mat = np.empty((dim, dim), dtype=complex)
    for b in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[b] = 1.0
        mat[:, b] = f(e.reshape(n, n)).reshape(dim)
    return mat


# ---------------------------------------------------------------------------
# Propagation


def dt_bound(h_sys: np.ndarray, decomposition: ExponentialBathDecomposition) -> float:
    """Largest admissible step: 0.1 hbar / max(|eigenvalues|, |nu| hbar)."""
    emax = float(np.abs(np.linalg.eigvalsh(np.asarray(h_sys, dtype=complex))).max())
    numax = float(np.abs(decomposition.nu).max()) * HBAR
    return DT_SAFETY_FACTOR * HBAR / max(emax, numax)


def _config_hash(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def propagate(
    problem: HeomProblem,
    t_final: float,
    dt: "float | None" = None,
    *,
    gamma_ratio: float = 1.0,
    subspace: "tuple[int, int] | None" = None,
    labels: "Sequence[str] | None" = None,
    sample_points: int = 1000,
    sample_stride: "int | None" = None,
    method: str = "auto",
    memory_cap: float = DEFAULT_MEMORY_CAP,
    return_state: bool = False,
):
    """Propagate the hierarchy from the factorized initial condition.

    The bath starts in thermal equilibrium: every auxiliary operator is
    zero except the physical one, which starts at rho0.  dt defaults to
    the admissibility bound; an explicit dt above the bound is an
    error.  subspace names the (ground, excited) indices used for the
    qubit block observables; it defaults to (0, 1).  Populations are
    reported per basis state under the given labels.

    Returns the sampled Trace, or (Trace, HeomState) with the final
    hierarchy when return_state is set.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if gamma_ratio <= 0:
        raise ValueError("gamma_ratio must be positive")
    n = problem.dim
    if subspace is None:
        subspace = (0, 1)
    g_idx, e_idx = subspace
    if not (0 <= g_idx < n and 0 <= e_idx < n and g_idx != e_idx):
        raise ValueError("subspace indices out of range")
    if labels is None:
        labels = tuple(f"s{i}" for i in range(n))
    if len(labels) != n:
        raise ValueError("one label per basis state required")

    bound = dt_bound(problem.h_sys, problem.decomposition)
    if dt is None:
        dt = bound
    elif dt > bound * (1.0 + 1e-9):
        raise ValueError(
            f"dt = {dt:.6g} ns exceeds the stability bound {bound:.6g} ns "
            "(0.1 hbar over the fastest energy scale)"
        )
    n_steps = max(1, math.ceil(t_final / dt - 1e-12))
    dt_eff = t_final / n_steps
    if sample_stride is None:
        sample_stride = max(1, n_steps // max(sample_points - 1, 1))

    dec = problem.decomposition
    c = dec.c
    nu = dec.nu
    n_terms = dec.n_terms
    if n_terms == 0:
        raise ValueError("decomposition has no terms")
    n_ados = hierarchy_size(n_terms, problem.depth)

    real_rates = np.abs(nu.imag).max() <= 1e-14 * max(np.abs(nu).max(), 1.0)
    if method == "auto":
        use_real = real_rates
    elif method == "real":
        if not real_rates:
            raise ValueError("real representation requires real decay rates")
        use_real = True
    elif method == "complex":
        use_real = False
    else:
        raise ValueError(f"unknown method {method!r}")

    nn = n * n
    bytes_per_float = 8 if use_real else 16
    est = 7 * n_ados * nn * bytes_per_float
    if est > memory_cap:
        raise MemoryError(
            f"hierarchy of {n_ados} operators needs about {est/1e9:.2f} GB "
            f"(cap {memory_cap/1e9:.2f} GB)"
        )

    indices, position = enumerate_hierarchy(n_terms, problem.depth)
    idx_arr = np.array(indices, dtype=np.int64)

    # Edge tables.  Construction order is by destination, then by mode,
    # down-edge before up-edge, which the kernel relies on for
    # deterministic accumulation.
    dsts, srcs, cas, cbs = [], [], [], []
    abs_c = np.abs(c)
    for i, idx in enumerate(indices):
        level = sum(idx)
        for k in range(n_terms):
            if abs_c[k] == 0.0:
                # zero-amplitude mode: both edge weights vanish and its
                # auxiliary tiers stay identically zero
                continue
            if idx[k] > 0:
                j = position[idx[:k] + (idx[k] - 1,) + idx[k + 1 :]]
                base = math.sqrt(idx[k] / abs_c[k])
                if use_real:
                    cas.append(base * c[k].real)
                    cbs.append(base * c[k].imag)
                else:
                    cas.append(base * c[k])
                    cbs.append(base * np.conj(c[k]))
                dsts.append(i)
                srcs.append(j)
            if level < problem.depth:
                j = position[idx[:k] + (idx[k] + 1,) + idx[k + 1 :]]
                amp = math.sqrt((idx[k] + 1) * abs_c[k])
                if use_real:
                    cas.append(amp)
                    cbs.append(0.0)
                else:
                    cas.append(amp)
                    cbs.append(amp)
                dsts.append(i)
                srcs.append(j)
    dst = np.array(dsts, dtype=np.int64)
    src = np.array(srcs, dtype=np.int64)

    h = problem.h_sys
    s_op = problem.coupling_op
    delta = dec.delta_strength

    def local_map(rho):
        out = (-1j / HBAR) * (h @ rho - rho @ h)
        if delta != 0.0:
            inner = s_op @ rho - rho @ s_op
            out = out - (delta / HBAR**2) * (s_op @ inner - inner @ s_op)
        return out

    if use_real:
        coords = _herm_coords(n)
        lt = _real_superop(local_map, coords, n).T.copy()
        ut = _real_superop(lambda r: (-1j / HBAR) * (s_op @ r - r @ s_op), coords, n).T.copy()
        wt = _real_superop(lambda r: (1.0 / HBAR) * (s_op @ r + r @ s_op), coords, n).T.copy()
        a_arr = np.array(cas, dtype=np.float64)
        b_arr = np.array(cbs, dtype=np.float64)
        decay = (idx_arr @ nu.real.reshape(-1, 1)).ravel()
        y = np.zeros((n_ados, nn))
        y[0] = _encode_herm(problem.rho0, coords)
        dtype = np.float64
    else:
        lt = _complex_superop(lambda r: local_map(r), n).T.copy()
        # complex path uses one-sided multiplications: a * (-i/hbar) S rho
        # and b * (+i/hbar) rho S per edge
        ut = _complex_superop(lambda r: (-1j / HBAR) * (s_op @ r), n).T.copy()
        wt = _complex_superop(lambda r: (1j / HBAR) * (r @ s_op), n).T.copy()
        a_arr = np.array(cas, dtype=np.complex128)
        b_arr = np.array(cbs, dtype=np.complex128)
        decay = (idx_arr @ nu.reshape(-1, 1)).ravel().astype(np.complex128)
        y = np.zeros((n_ados, nn), dtype=np.complex128)
        y[0] = problem.rho0.reshape(nn)
        dtype = np.complex128

    k_buf = np.empty_like(y)
    ytmp = np.empty_like(y)
    acc = np.empty_like(y)
    xu = np.empty_like(y)
    xw = np.empty_like(y)

    def rhs(state, out):
        np.matmul(state, lt, out=out)
        np.matmul(state, ut, out=xu)
        np.matmul(state, wt, out=xw)
        _kernel.edge_apply(out, state, xu, xw, decay, dst, src, a_arr, b_arr)

    def rho_of(row) -> np.ndarray:
        if use_real:
            return _decode_herm(row, coords, n)
        return row.reshape(n, n).copy()

    t_samples, pops, raw_z, norm_z, coh, leak, blocks = [], [], [], [], [], [], []

    def record(step_idx):
        rho = rho_of(y[0])
        tr = float(np.trace(rho).real)
        drift = abs(tr - 1.0)
        t_now = step_idx * dt_eff
        if not np.isfinite(y).all():
            raise HeomDivergenceError(
                "hierarchy overflow", step=step_idx, time=t_now, trace_drift=drift
            )
        if drift > TRACE_DRIFT_LIMIT:
            raise HeomDivergenceError(
                "trace drift exceeds limit", step=step_idx, time=t_now, trace_drift=drift
            )
        p = np.real(np.diag(rho))
        pg, pe = p[g_idx], p[e_idx]
        off = rho[g_idx, e_idx]
        t_samples.append(t_now)
        pops.append(p)
        raw_z.append(pe - pg)
        denom = pg + pe
        norm_z.append((pe - pg) / denom if denom > 1e-300 else 0.0)
        coh.append(abs(off))
        leak.append(1.0 - denom)
        blocks.append(
            np.array([[rho[g_idx, g_idx], off], [np.conj(off), rho[e_idx, e_idx]]])
        )

    record(0)
    t_wall = perf_counter()
    sixth, third, half = dt_eff / 6.0, dt_eff / 3.0, dt_eff / 2.0
    for step in range(1, n_steps + 1):
        rhs(y, k_buf)
        _kernel.lincomb(acc, y, sixth, k_buf)
        _kernel.lincomb(ytmp, y, half, k_buf)
        rhs(ytmp, k_buf)
        _kernel.accum(acc, third, k_buf)
        _kernel.lincomb(ytmp, y, half, k_buf)
        rhs(ytmp, k_buf)
        _kernel.accum(acc, third, k_buf)
        _kernel.lincomb(ytmp, y, dt_eff, k_buf)
        rhs(ytmp, k_buf)
        _kernel.accum(acc, sixth, k_buf)
        y, acc = acc, y
        if step % sample_stride == 0 or step == n_steps:
            record(step)

    times = np.array(t_samples)
    pop_arr = np.array(pops)
    observables = {f"pop_{lab}": pop_arr[:, i] for i, lab in enumerate(labels)}
    observables["sigma_z"] = np.array(raw_z)
    observables["sigma_z_normalized"] = np.array(norm_z)
    observables["coherence_abs"] = np.array(coh)
    observables["leakage"] = np.array(leak)

    metadata = {
        "dim": n,
        "depth": problem.depth,
        "n_terms": n_terms,
        "n_ados": n_ados,
        "dt_ns": dt_eff,
        "n_steps": n_steps,
        "sample_stride": sample_stride,
        "gamma_ratio": gamma_ratio,
        "method": "real" if use_real else "complex",
        "delta_strength": delta,
        "labels": list(labels),
        "subspace": [g_idx, e_idx],
        "runtime_s": perf_counter() - t_wall,
    }
    hash_input = {k: v for k, v in metadata.items() if k != "runtime_s"}
    metadata["config_hash"] = _config_hash(
        hash_input
        | {
            "h_sys": problem.h_sys.tolist(),
            "coupling_op": problem.coupling_op.tolist(),
            "c": dec.c.tolist(),
            "nu": dec.nu.tolist(),
            "rho0": problem.rho0.tolist(),
        }
    )

    trace = Trace(
        times_ns=times,
        times_target_ps=times / gamma_ratio * 1e3,
        observables=observables,
        subspace_rho=np.array(blocks),
        labels=tuple(labels),
        metadata=metadata,
    )
    if return_state:
        ados = {tuple(map(int, idx_arr[i])): rho_of(y[i]) for i in range(n_ados)}
        return trace, HeomState(time=float(n_steps * dt_eff), ados=ados)
    return trace
