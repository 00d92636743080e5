"""Run configuration from structured text.

INI-style sections with unit-suffixed keys: every physical quantity
names its unit in the key itself (delta_mev = 10, spacing_uev = 0.5),
so a config file is unambiguous without consulting the docs.  Unknown
sections or keys are rejected rather than ignored.
"""

from __future__ import annotations

import configparser

from . import bath, experiments, hamiltonians, mapping


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_ENERGY_UEV = {"nev": 1e-3, "uev": 1.0, "mev": 1e3, "ev": 1e6}
_TEMPERATURE_K = {"mk": 1e-3, "k": 1.0}
_TIME_PS = {"fs": 1e-3, "ps": 1.0, "ns": 1e3}
_TIME_NS = {"ps": 1e-3, "ns": 1.0, "us": 1e3}

_COUPLING_KINDS = {
    "displaced": hamiltonians.CouplingKind.DISPLACED_OSCILLATOR,
    "displaced-oscillator": hamiltonians.CouplingKind.DISPLACED_OSCILLATOR,
    "spin-boson": hamiltonians.CouplingKind.SPIN_BOSON,
}

_ABLATIONS = {a.value: a for a in experiments.Ablation}


_MISSING = object()


class _Section:
    """One config section with consumption tracking for typo detection."""

    def __init__(self, name: str, items: dict):
        self.name = name
        self.items = dict(items)
        self.seen = set()

    def unit_value(self, base: str, units: dict, default=_MISSING):
        matches = [
            key
            for key in self.items
            if key.startswith(base + "_") and key[len(base) + 1 :] in units
        ]
        if len(matches) > 1:
            raise ConfigError(f"[{self.name}] {base} given in several units: {matches}")
        if not matches:
            if default is _MISSING:
                raise ConfigError(f"[{self.name}] missing required key {base}_<unit>")
            return default
        key = matches[0]
        self.seen.add(key)
        raw = self.items[key]
        try:
            value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number") from exc
        return value * units[key[len(base) + 1 :]]

    def plain(self, key: str, conv=float, default=_MISSING):
        if key not in self.items:
            if default is _MISSING:
                raise ConfigError(f"[{self.name}] missing required key {key}")
            return default
        self.seen.add(key)
        raw = self.items[key]
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is invalid") from exc

    def check_consumed(self):
        extra = set(self.items) - self.seen
        if extra:
            raise ConfigError(f"[{self.name}] unknown keys: {sorted(extra)}")


def _read_ini(path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return {name: dict(parser[name]) for name in parser.sections()}


def load_config(path) -> experiments.EmulationConfig:
    """Parse a run configuration file into an EmulationConfig."""
    sections = _read_ini(path)
    known = {"target", "bath", "map", "heom", "noise", "emulation"}
    unknown = set(sections) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    for required in ("target", "bath", "map"):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")

    tgt = _Section("target", sections["target"])
    delta = tgt.unit_value("delta", _ENERGY_UEV)
    eta = tgt.unit_value("eta", _ENERGY_UEV)
    kind_name = tgt.plain("coupling", str, "displaced").strip().lower()
    if kind_name not in _COUPLING_KINDS:
        raise ConfigError(
            f"[target] coupling must be one of {sorted(set(_COUPLING_KINDS))}"
        )
    temperature = tgt.unit_value("temperature", _TEMPERATURE_K)
    tgt.check_consumed()
    system = hamiltonians.TwoLevelSystem(
        delta=delta, eta=eta, coupling_kind=_COUPLING_KINDS[kind_name]
    )

    bth = _Section("bath", sections["bath"])
    lam = bth.unit_value("lambda", _ENERGY_UEV)
    omega_c = bth.unit_value("omega_c", _ENERGY_UEV)
    bth.check_consumed()
    try:
        sd = bath.DrudeLorentz(lam=lam, omega_c=omega_c)
    except ValueError as exc:
        raise ConfigError(f"[bath] {exc}") from exc

    mp = _Section("map", sections["map"])
    sim_t = mp.unit_value("simulator_temperature", _TEMPERATURE_K)
    sensitivity = mp.plain("sensitivity", float)
    tunnel = mp.unit_value("tunnel_coupling", _ENERGY_UEV)
    g_factor = mp.plain("g_factor", float, 2.0)
    sigma_eps = mp.unit_value("sigma_epsilon", _ENERGY_UEV, 2.0)
    mp.check_consumed()
    try:
        map_spec = mapping.MappingSpec(
            target_temperature=temperature,
            simulator_temperature=sim_t,
            sensitivity=sensitivity,
            tunnel_coupling=tunnel,
            g_factor=g_factor,
            sigma_epsilon=sigma_eps,
        )
    except ValueError as exc:
        raise ConfigError(f"[map] {exc}") from exc

    if "heom" in sections:
        hm = _Section("heom", sections["heom"])
        depth = hm.plain("depth", int, 10)
        n_pade = hm.plain("n_pade", int, 6)
        t_final = hm.unit_value("t_final", _TIME_PS, 1.5)
        dt = hm.unit_value("dt", _TIME_NS, None)
        sample_points = hm.plain("sample_points", int, 1000)
        hm.check_consumed()
    else:
        depth, n_pade, t_final, dt, sample_points = 10, 6, 1.5, None, 1000
    try:
        settings = experiments.HeomSettings(
            depth=depth,
            n_pade=n_pade,
            t_final_ps=t_final,
            dt_ns=dt,
            sample_points=sample_points,
        )
    except ValueError as exc:
        raise ConfigError(f"[heom] {exc}") from exc

    noise = None
    if "noise" in sections:
        nz = _Section("noise", sections["noise"])
        try:
            noise = experiments.NoiseSpec(
                sigma_epsilon=nz.unit_value("sigma_epsilon", _ENERGY_UEV, 2.0),
                n_points=nz.plain("n_points", int, 10),
                spacing=nz.unit_value("spacing", _ENERGY_UEV, 0.5),
            )
        except ValueError as exc:
            raise ConfigError(f"[noise] {exc}") from exc
        nz.check_consumed()

    ablation = experiments.Ablation.NONE
    coupling_scale = 1.0
    if "emulation" in sections:
        em = _Section("emulation", sections["emulation"])
        abl_name = em.plain("ablation", str, "none").strip().lower()
        if abl_name not in _ABLATIONS:
            raise ConfigError(f"[emulation] ablation must be one of {sorted(_ABLATIONS)}")
        ablation = _ABLATIONS[abl_name]
        coupling_scale = em.plain("coupling_scale", float, 1.0)
        em.check_consumed()

    try:
        return experiments.EmulationConfig(
            system=system,
            spectral_density=sd,
            map_spec=map_spec,
            settings=settings,
            noise=noise,
            ablation=ablation,
            coupling_scale=coupling_scale,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


EXAMPLE_CONFIG = """\
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
depth = 10
n_pade = 6
t_final_ps = 1.5
sample_points = 1000

# optional: static detuning noise
# [noise]
# sigma_epsilon_uev = 2
# n_points = 10
# spacing_uev = 0.5

# optional: coupling ablations
# [emulation]
# ablation = drop-qbs-leak
"""
