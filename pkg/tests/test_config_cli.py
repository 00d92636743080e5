"""Config parsing and the command-line entry points.

CLI commands run in-process through cli.main(argv); HEOM-backed
commands use a cheap truncation written into a temporary config file.
"""

import json

import numpy as np
import pytest

from oqsim import bath, cli, experiments as ex, heom, mapping, qbs
from oqsim.config import EXAMPLE_CONFIG, ConfigError, load_config

CHEAP_INI = """\
[target]
delta_mev = 10
eta_mev = 5
coupling = displaced
temperature_k = 300

[bath]
lambda_mev = 5
omega_c_mev = 10

[map]
simulator_temperature_mk = 60
sensitivity = 0.6
tunnel_coupling_uev = 100

[heom]
depth = 3
n_pade = 2
t_final_fs = 50
sample_points = 40
"""


@pytest.fixture
def cheap_ini(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(CHEAP_INI)
    return str(path)


# --- config file parsing -----------------------------------------------------


def test_example_config_loads(tmp_path):
    path = tmp_path / "example.ini"
    path.write_text(EXAMPLE_CONFIG)
    cfg = load_config(path)
    assert cfg.system.delta == 1.0e4
    assert cfg.system.eta == 5.0e3
    assert cfg.spectral_density.lam == 5.0e3
    assert cfg.spectral_density.omega_c == 1.0e4
    assert cfg.map_spec.simulator_temperature == pytest.approx(0.06)
    assert cfg.map_spec.sensitivity == 0.6
    assert cfg.map_spec.tunnel_coupling == 100.0
    assert cfg.settings.depth == 10
    assert cfg.settings.n_pade == 6
    assert cfg.settings.t_final_ps == 1.5
    assert cfg.settings.sample_points == 1000
    assert cfg.noise is None
    assert cfg.ablation is ex.Ablation.NONE
    assert cfg.coupling_scale == 1.0


def test_unit_suffixes_normalize(tmp_path):
    path = tmp_path / "units.ini"
    path.write_text(
        "[target]\ndelta_ev = 0.01\neta_nev = 5e6\ntemperature_k = 300\n"
        "[bath]\nlambda_mev = 5\nomega_c_mev = 10\n"
        "[map]\nsimulator_temperature_k = 0.06\nsensitivity = 0.6\n"
        "tunnel_coupling_mev = 0.1\n"
        "[heom]\nt_final_fs = 1500\ndt_ps = 0.1\n"
    )
    cfg = load_config(path)
    assert cfg.system.delta == pytest.approx(1.0e4, rel=1e-12)
    assert cfg.system.eta == pytest.approx(5.0e3, rel=1e-12)
    assert cfg.map_spec.tunnel_coupling == pytest.approx(100.0, rel=1e-12)
    assert cfg.settings.t_final_ps == pytest.approx(1.5, rel=1e-12)
    assert cfg.settings.dt_ns == pytest.approx(1e-4, rel=1e-12)


def test_noise_and_emulation_sections(tmp_path):
    path = tmp_path / "noisy.ini"
    path.write_text(
        CHEAP_INI
        + "\n[noise]\nsigma_epsilon_uev = 2\nn_points = 4\nspacing_uev = 0.5\n"
        + "\n[emulation]\nablation = drop-qbs-leak\ncoupling_scale = 0.5\n"
    )
    cfg = load_config(path)
    assert cfg.noise == ex.NoiseSpec(2.0, 4, 0.5)
    assert cfg.ablation is ex.Ablation.DROP_QBS_LEAK
    assert cfg.coupling_scale == 0.5


@pytest.mark.parametrize(
    "mangle, message",
    [
        (lambda s: s + "\n[banana]\nsplit = 1\n", "unknown sections"),
        (lambda s: s.replace("[map]\n", "[map]\ntypo_key = 1\n"), "unknown keys"),
        (
            lambda s: s.replace("[map]\nsimulator_temperature_mk = 60\n", "[map]\n"),
            "missing required key",
        ),
        (
            lambda s: s.replace("delta_mev = 10", "delta_mev = 10\ndelta_uev = 7"),
            "several units",
        ),
        (lambda s: s.replace("delta_mev = 10", "delta_mev = ten"), "not a number"),
        (
            lambda s: s.replace("coupling = displaced", "coupling = dipole"),
            "coupling must be one of",
        ),
        (lambda s: s.replace("sensitivity = 0.6", "sensitivity = 1.6"), "sensitivity"),
    ],
)
def test_malformed_configs_rejected(tmp_path, mangle, message):
    path = tmp_path / "bad.ini"
    path.write_text(mangle(CHEAP_INI))
    with pytest.raises(ConfigError, match=message):
        load_config(path)


def test_missing_sections_and_files(tmp_path):
    path = tmp_path / "incomplete.ini"
    path.write_text("[target]\ndelta_mev = 10\neta_mev = 5\ntemperature_k = 300\n")
    with pytest.raises(ConfigError, match="missing required section"):
        load_config(path)
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "nope.ini")
    bad_abl = tmp_path / "abl.ini"
    bad_abl.write_text(CHEAP_INI + "\n[emulation]\nablation = drop-everything\n")
    with pytest.raises(ConfigError, match="ablation must be one of"):
        load_config(bad_abl)


# --- CLI: map ----------------------------------------------------------------


def test_map_flags_write_json(tmp_path, capsys):
    out = tmp_path / "map.json"
    rc = cli.main(
        [
            "map",
            "--tunnel-coupling-uev", "100",
            "--sensitivity", "0.6",
            "--gamma", "5000",
            "--delta-uev", "10000",
            "--eta-uev", "5000",
            "--json", str(out),
        ]
    )
    assert rc == 0
    printed = capsys.readouterr().out
    assert "B_avg" in printed and "feasible: yes" in printed
    payload = json.loads(out.read_text())
    assert payload["detuning_uev"] == pytest.approx(40.8248290463863, rel=1e-10)
    assert payload["b_avg_t"] == pytest.approx(1.0752097158668223, rel=1e-10)
    assert payload["delta_b_t"] == pytest.approx(0.038630277898772554, rel=1e-10)
    assert payload["tau_d_ns"] == pytest.approx(3.4463897471700022, rel=1e-10)
    assert payload["tau_target_ps"] == pytest.approx(
        payload["tau_d_ns"] / 5000.0 * 1e3, rel=1e-12
    )
    assert payload["feasible"] is True


def test_map_requires_full_flag_set(capsys):
    rc = cli.main(["map", "--sensitivity", "0.6"])
    assert rc == 2
    assert "--tunnel-coupling-uev" in capsys.readouterr().err


def test_map_scale_table(cheap_ini, capsys):
    rc = cli.main(["map", "--config", cheap_ini, "--scale-table"])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "gamma = 5000" in printed
    assert "50 ns" in printed


# --- CLI: error paths --------------------------------------------------------


def test_missing_config_is_exit_2(tmp_path, capsys):
    rc = cli.main(
        ["emulate", "--config", str(tmp_path / "no.ini"), "--out-dir", str(tmp_path)]
    )
    assert rc == 2
    assert "not found" in capsys.readouterr().err


def test_bad_grid_is_exit_2(cheap_ini, tmp_path, capsys):
    base = ["sweep", "--config", cheap_ini, "--out", str(tmp_path / "s.csv")]
    assert cli.main(base + ["--grid", "4by4"]) == 2
    assert cli.main(base + ["--grid", "0x2"]) == 2
    assert cli.main(base + ["--ks-range", "0.9:0.2"]) == 2
    capsys.readouterr()


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_threads_env_override(cheap_ini, monkeypatch, capsys):
    monkeypatch.setenv("OQS_THREADS", "zero point five")
    rc = cli.main(["map", "--config", cheap_ini])
    assert rc == 2
    assert "OQS_THREADS" in capsys.readouterr().err
    monkeypatch.setenv("OQS_THREADS", "0")
    assert cli.main(["map", "--config", cheap_ini]) == 2
    capsys.readouterr()


# --- CLI: emulate / compare / sweep -----------------------------------------


def test_emulate_writes_artifacts(cheap_ini, tmp_path, capsys):
    out_dir = tmp_path / "run"
    rc = cli.main(["emulate", "--config", cheap_ini, "--out-dir", str(out_dir)])
    assert rc == 0
    for name in ("target.csv", "simulator.csv", "comparison.csv", "summary.json"):
        assert (out_dir / name).exists()
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["min_fidelity"] > 0.999
    assert summary["max_leakage"] < 1e-2
    assert summary["n_samples"] >= 40
    assert "min fidelity" in capsys.readouterr().out

    sim = heom.read_trace_csv(out_dir / "simulator.csv")
    assert sim.metadata["ablation"] == "none"
    np.testing.assert_array_equal(sim.observables["pop_T0"], 0.0)


def test_compare_command_reproduces_emulate(cheap_ini, tmp_path, capsys):
    out_dir = tmp_path / "run"
    assert cli.main(["emulate", "--config", cheap_ini, "--out-dir", str(out_dir)]) == 0
    emu_summary = json.loads((out_dir / "summary.json").read_text())

    cmp_csv = tmp_path / "cmp.csv"
    cmp_summary = tmp_path / "cmp.json"
    rc = cli.main(
        [
            "compare",
            "--target", str(out_dir / "target.csv"),
            "--simulator", str(out_dir / "simulator.csv"),
            "--out", str(cmp_csv),
            "--summary", str(cmp_summary),
        ]
    )
    assert rc == 0
    capsys.readouterr()
    redone = json.loads(cmp_summary.read_text())
    # trace CSVs round-trip exactly, so the redone comparison is identical
    assert redone["min_fidelity"] == pytest.approx(
        emu_summary["min_fidelity"], abs=1e-15
    )
    assert redone["max_leakage"] == pytest.approx(emu_summary["max_leakage"], abs=1e-15)


def test_emulate_ablation_flag(cheap_ini, tmp_path, capsys):
    out_dir = tmp_path / "ablated"
    rc = cli.main(
        [
            "emulate",
            "--config", cheap_ini,
            "--out-dir", str(out_dir),
            "--ablation", "drop-qbs-leak",
        ]
    )
    assert rc == 0
    capsys.readouterr()
    sim = heom.read_trace_csv(out_dir / "simulator.csv")
    assert sim.metadata["ablation"] == "drop-qbs-leak"


def test_sweep_command(cheap_ini, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    summary = tmp_path / "sweep.json"
    rc = cli.main(
        [
            "sweep",
            "--config", cheap_ini,
            "--out", str(out),
            "--grid", "2x2",
            "--ks-range", "0.3:0.6",
            "--tc-range", "30:100",
            "--summary", str(summary),
        ]
    )
    assert rc == 0
    capsys.readouterr()
    res = ex.read_sweep_csv(out)
    np.testing.assert_array_equal(res.sensitivities, [0.3, 0.6])
    np.testing.assert_array_equal(res.tunnel_couplings, [30.0, 100.0])
    assert np.isfinite(res.min_fidelity).all()
    payload = json.loads(summary.read_text())
    assert payload["n_failures"] == 0
    assert payload["grid"] == [2, 2]
    assert payload["min_fidelity_overall"] <= payload["max_fidelity_overall"]


def test_emulation_is_deterministic(cheap_ini, tmp_path, capsys):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert cli.main(["emulate", "--config", cheap_ini, "--out-dir", str(d)]) == 0
    capsys.readouterr()
    for name in ("target.csv", "simulator.csv", "comparison.csv"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


# --- CLI: synthesize / qbs-spectrum ------------------------------------------


def test_synthesize_then_spectrum(cheap_ini, tmp_path, capsys):
    design_path = tmp_path / "design.json"
    spectrum_path = tmp_path / "fit.csv"
    rc = cli.main(
        [
            "synthesize",
            "--config", cheap_ini,
            "--out", str(design_path),
            "--units", "8",
            "--max-impedance-ohm", "2000",
            "--spectrum-csv", str(spectrum_path),
        ]
    )
    assert rc == 0
    printed = capsys.readouterr().out
    assert "8-unit design" in printed
    assert "series plan" in printed
    design = qbs.read_design_json(design_path)
    assert len(design.units) == 8
    tab = bath.read_tabulated_csv(spectrum_path)
    assert tab.omega.size == 1499

    out = tmp_path / "spectrum.csv"
    rc = cli.main(
        [
            "qbs-spectrum",
            "--design", str(design_path),
            "--out", str(out),
            "--gamma", "5000",
            "--sensitivity", "0.6",
            "--points", "200",
        ]
    )
    assert rc == 0
    capsys.readouterr()
    spec = bath.read_tabulated_csv(out)
    assert spec.omega.size == 199
    assert np.all(spec.j >= 0.0)


def test_qbs_spectrum_missing_design(tmp_path, capsys):
    rc = cli.main(
        [
            "qbs-spectrum",
            "--design", str(tmp_path / "ghost.json"),
            "--out", str(tmp_path / "o.csv"),
            "--gamma", "5000",
            "--sensitivity", "0.6",
        ]
    )
    assert rc == 2
    assert "not found" in capsys.readouterr().err
