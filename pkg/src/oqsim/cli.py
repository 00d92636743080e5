"""Command-line interface.

Subcommands cover the workflow end to end: derive control fields
(map), fit a circuit bank to a spectral density (synthesize), run one
emulation (emulate), scan operating points (sweep), compare saved
traces (compare), and tabulate a design's effective spectral density
(qbs-spectrum).

Exit codes: 0 success, 1 numerical failure, 2 usage or config error.
The OQS_THREADS environment variable overrides --threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bath, experiments, heom, mapping, qbs
from . import config as config_mod


def _threads(args) -> int:
    env = os.environ.get("OQS_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise config_mod.ConfigError(f"OQS_THREADS = {env!r} is not an integer")
    else:
        value = getattr(args, "threads", 1) or 1
    if value < 1:
        raise config_mod.ConfigError("thread count must be at least 1")
    return value


def _load(args) -> experiments.EmulationConfig:
    if not Path(args.config).exists():
        raise config_mod.ConfigError(f"config file not found: {args.config}")
    return config_mod.load_config(args.config)


def _cmd_map(args, threads: int) -> int:
    if args.config:
        cfg = _load(args)
        spec = cfg.map_spec
        delta, eta = cfg.system.delta, cfg.system.eta
    else:
        missing = [
            name
            for name, value in (
                ("--tunnel-coupling-uev", args.tunnel_coupling_uev),
                ("--sensitivity", args.sensitivity),
                ("--gamma", args.gamma),
                ("--delta-uev", args.delta_uev),
                ("--eta-uev", args.eta_uev),
            )
            if value is None
        ]
        if missing:
            raise config_mod.ConfigError(
                "map needs a --config file or all of: " + ", ".join(missing)
            )
        spec = mapping.spec_from_gamma(
            target_temperature=args.target_temperature_k,
            gamma_ratio=args.gamma,
            sensitivity=args.sensitivity,
            tunnel_coupling=args.tunnel_coupling_uev,
            g_factor=args.g_factor,
            sigma_epsilon=args.sigma_epsilon_uev,
        )
        delta, eta = args.delta_uev, args.eta_uev

    fields = mapping.control_fields(spec, delta, eta)
    feas = mapping.feasibility(fields)
    budget = mapping.coherence_budget(spec)
    eta_cap = mapping.eta_upper_limit(
        spec.gamma_ratio, spec.g_factor, mapping.DELTA_B_CAP_T
    )
    lines = [
        f"detuning = {fields.detuning:.6g} ueV",
        f"B_avg = {fields.b_avg:.4g} T",
        f"Delta_B = {fields.delta_b * 1e3:.4g} mT",
        f"tau_d = {budget.tau_d_ns:.4g} ns (simulator frame)"
        f" -> {budget.tau_target_ps:.4g} ps (target frame)",
        f"eta_max = {eta_cap:.4g} ueV (target frame, |Delta_B| <= "
        f"{mapping.DELTA_B_CAP_T * 1e3:g} mT)",
        "feasible: " + ("yes" if feas["feasible"] else "no"),
    ]
    lines.extend("warning: " + msg for msg in feas["warnings"])
    print("\n".join(lines))
    if args.scale_table:
        print()
        print(mapping.scale_report(spec).to_text())
    if args.json:
        payload = {
            "detuning_uev": fields.detuning,
            "b_avg_t": fields.b_avg,
            "delta_b_t": fields.delta_b,
            "tau_d_ns": budget.tau_d_ns,
            "tau_target_ps": budget.tau_target_ps,
            "eta_max_uev": eta_cap,
            "feasible": feas["feasible"],
            "warnings": feas["warnings"],
        }
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def _cmd_synthesize(args, threads: int) -> int:
    cfg = _load(args)
    sd = cfg.spectral_density
    omega_star = args.omega_star_uev if args.omega_star_uev else sd.omega_c
    _, j_high = bath.split_spectral_density(sd, omega_star)
    kappa = bath.KappaParams(
        lever_arm=args.lever_arm, k_s=cfg.map_spec.sensitivity, n=args.dots_n
    ).kappa_coulomb
    lo = args.band_lo_uev if args.band_lo_uev else 0.4 * omega_star
    hi = args.band_hi_uev if args.band_hi_uev else 20.0 * omega_star
    fit = qbs.fit_qbs(
        j_high,
        args.units,
        (lo, hi),
        gamma_uev=args.gamma_j_uev,
        kappa=kappa,
        gamma_ratio=cfg.gamma,
    )
    qbs.write_design_json(args.out, fit.design)
    print(f"wrote {args.units}-unit design to {args.out}")
    print(f"peak target = {fit.peak_target:.6g} ueV")
    print(f"residual (L2 over grid) = {fit.residual_l2:.6g} ueV")
    print(f"residual (max) = {fit.residual_max:.6g} ueV "
          f"({fit.residual_max / fit.peak_target:.2%} of peak)")
    if args.max_impedance_ohm:
        plan = qbs.plan_series_counts(fit.design, args.max_impedance_ohm)
        counts = [u.series_count for u in plan.design.units]
        print(f"series plan (cap {args.max_impedance_ohm:g} ohm): "
              f"max count {max(counts)}, flagged units {sorted(plan.infeasible)}")
    if args.spectrum_csv:
        synth = qbs.qbs_to_spectral_density(fit.design, kappa, cfg.gamma)
        qbs.export_spectrum_csv(args.spectrum_csv, synth, fit.grid)
    return 0


def _write_emulation(result: experiments.EmulationResult, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    result.target.to_csv(out_dir / "target.csv")
    result.simulator.to_csv(out_dir / "simulator.csv")
    result.comparison.to_csv(out_dir / "comparison.csv")
    summary = result.comparison.summary()
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=str)
        fh.write("\n")
    return summary


def _cmd_emulate(args, threads: int) -> int:
    cfg = _load(args)
    if args.ablation:
        cfg = experiments.EmulationConfig(
            system=cfg.system,
            spectral_density=cfg.spectral_density,
            map_spec=cfg.map_spec,
            settings=cfg.settings,
            noise=cfg.noise,
            ablation=experiments.Ablation(args.ablation),
            coupling_scale=cfg.coupling_scale,
        )
    result = experiments.emulate(cfg, threads=threads)
    summary = _write_emulation(result, Path(args.out_dir))
    print(f"min fidelity = {summary['min_fidelity']:.6f}")
    print(f"max leakage = {summary['max_leakage']:.3e}")
    print(f"wrote traces and summary to {args.out_dir}")
    return 0


def _parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise config_mod.ConfigError(f"--grid wants NxM, got {text!r}")
    try:
        n_ks, n_tc = int(parts[0]), int(parts[1])
    except ValueError:
        raise config_mod.ConfigError(f"--grid wants NxM integers, got {text!r}")
    if n_ks < 1 or n_tc < 1:
        raise config_mod.ConfigError("--grid needs at least one point per axis")
    return n_ks, n_tc


def _parse_range(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise config_mod.ConfigError(f"{flag} wants lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise config_mod.ConfigError(f"{flag} wants numbers, got {text!r}")
    if not lo < hi:
        raise config_mod.ConfigError(f"{flag} needs lo < hi")
    return lo, hi


def _cmd_sweep(args, threads: int) -> int:
    cfg = _load(args)
    n_ks, n_tc = _parse_grid(args.grid)
    ks_lo, ks_hi = _parse_range(args.ks_range, "--ks-range")
    tc_lo, tc_hi = _parse_range(args.tc_range, "--tc-range")
    ks = np.linspace(ks_lo, ks_hi, n_ks)
    tc = np.linspace(tc_lo, tc_hi, n_tc)
    result = experiments.sweep(cfg, ks, tc, variant=args.variant, threads=threads)
    result.to_csv(args.out)
    print(f"wrote {n_ks}x{n_tc} {args.variant} sweep to {args.out}")
    if result.failures:
        print(f"{len(result.failures)} cell(s) failed:", file=sys.stderr)
        for i, j, msg in result.failures:
            print(f"  ({result.sensitivities[i]:g}, {result.tunnel_couplings[j]:g}): "
                  f"{msg}", file=sys.stderr)
    if args.summary:
        finite = result.min_fidelity[np.isfinite(result.min_fidelity)]
        payload = {
            "variant": result.variant,
            "grid": [int(n_ks), int(n_tc)],
            "min_fidelity_overall": float(finite.min()) if finite.size else None,
            "max_fidelity_overall": float(finite.max()) if finite.size else None,
            "n_failures": len(result.failures),
            "runtime_s": result.metadata.get("runtime_s"),
        }
        Path(args.summary).write_text(json.dumps(payload, indent=2) + "\n")
    return 0 if not result.failures else 1


def _cmd_compare(args, threads: int) -> int:
    for path in (args.target, args.simulator):
        if not Path(path).exists():
            raise config_mod.ConfigError(f"trace file not found: {path}")
    target = heom.read_trace_csv(args.target)
    simulator = heom.read_trace_csv(args.simulator)
    comp = experiments.compare(target, simulator)
    comp.to_csv(args.out)
    print(f"min fidelity = {comp.min_fidelity:.6f}")
    print(f"max leakage = {comp.max_leakage:.3e}")
    if args.summary:
        Path(args.summary).write_text(
            json.dumps(comp.summary(), indent=2, default=str) + "\n"
        )
    return 0


def _cmd_qbs_spectrum(args, threads: int) -> int:
    if not Path(args.design).exists():
        raise config_mod.ConfigError(f"design file not found: {args.design}")
    design = qbs.read_design_json(args.design)
    kappa = bath.KappaParams(
        lever_arm=args.lever_arm, k_s=args.sensitivity, n=args.dots_n
    ).kappa_coulomb
    synth = qbs.qbs_to_spectral_density(design, kappa, args.gamma)
    hi = args.hi_uev
    if hi is None:
        hi = 1.5 * args.gamma * max(u.omega_j for u in design.units)
    grid = np.linspace(args.lo_uev, hi, args.points)
    if grid[0] == 0.0:
        grid = grid[1:]
    qbs.export_spectrum_csv(args.out, synth, grid)
    print(f"wrote spectrum ({grid.size} points) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oqsim",
        description="Analog emulation of open two-level quantum systems "
        "with a double-dot simulator.",
    )
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for any stochastic component")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", help="derive control fields for an operating point")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--tunnel-coupling-uev", type=float)
    p.add_argument("--sensitivity", type=float)
    p.add_argument("--gamma", type=float, help="temperature ratio T / T_qs")
    p.add_argument("--delta-uev", type=float, help="target splitting")
    p.add_argument("--eta-uev", type=float, help="target coupling")
    p.add_argument("--g-factor", type=float, default=2.0)
    p.add_argument("--target-temperature-k", type=float, default=300.0)
    p.add_argument("--sigma-epsilon-uev", type=float, default=2.0)
    p.add_argument("--scale-table", action="store_true",
                   help="print the frame-conversion table")
    p.add_argument("--json", help="also write the numbers to this JSON file")
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("synthesize", help="fit an RLC bank to the fast bath part")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="design JSON path")
    p.add_argument("--units", type=int, default=50)
    p.add_argument("--omega-star-uev", type=float, default=None,
                   help="splitting frequency (default: bath cutoff)")
    p.add_argument("--gamma-j-uev", type=float, default=2000.0,
                   help="resonance width, target frame")
    p.add_argument("--band-lo-uev", type=float, default=None)
    p.add_argument("--band-hi-uev", type=float, default=None)
    p.add_argument("--lever-arm", type=float, default=0.1)
    p.add_argument("--dots-n", type=int, default=1)
    p.add_argument("--max-impedance-ohm", type=float, default=None,
                   help="also print a series split plan against this cap")
    p.add_argument("--spectrum-csv", default=None,
                   help="tabulate the fitted density to this CSV")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("emulate", help="run target and simulator, compare")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ablation",
                   choices=[a.value for a in experiments.Ablation])
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_emulate)

    p = sub.add_parser("sweep", help="min-fidelity heat map over (k_s, t_c)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="matrix CSV path")
    p.add_argument("--grid", default="4x4", help="N_ks x N_tc, e.g. 4x4")
    p.add_argument("--ks-range", default="0.25:0.9")
    p.add_argument("--tc-range", default="10:100", help="ueV")
    p.add_argument("--variant", default="pristine",
                   choices=list(experiments.SWEEP_VARIANTS))
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--summary", default=None, help="summary JSON path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("compare", help="fidelity between two saved traces")
    p.add_argument("--target", required=True)
    p.add_argument("--simulator", required=True)
    p.add_argument("--out", required=True, help="comparison CSV path")
    p.add_argument("--summary", default=None)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("qbs-spectrum",
                       help="effective spectral density of a saved design")
    p.add_argument("--design", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gamma", type=float, required=True,
                   help="temperature ratio used to read the circuit frame")
    p.add_argument("--sensitivity", type=float, required=True)
    p.add_argument("--lever-arm", type=float, default=0.1)
    p.add_argument("--dots-n", type=int, default=1)
    p.add_argument("--lo-uev", type=float, default=0.0)
    p.add_argument("--hi-uev", type=float, default=None)
    p.add_argument("--points", type=int, default=2000)
    p.set_defaults(func=_cmd_qbs_spectrum)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None:
        np.random.seed(args.seed)
    try:
        threads = _threads(args)
        return args.func(args, threads)
    except config_mod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        heom.HeomDivergenceError,
        bath.QuadratureError,
        ValueError,
        ArithmeticError,
        AssertionError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
