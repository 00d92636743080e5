"""Analog emulation of open two-level quantum systems.

A double quantum dot plays the system, an array of RLC circuits plays
the bath, and a temperature ratio gamma maps physical energies and
times onto the cryogenic device.  The package covers the pipeline:
control-field mapping, bath synthesis and decomposition, numerically
exact propagation, and fidelity/leakage/noise analysis.
"""

from . import bath, config, experiments, hamiltonians, heom, mapping, qbs, units
from .bath import BathCorrelation, DrudeLorentz, pade_decompose, split_spectral_density
from .experiments import (
    Ablation,
    EmulationConfig,
    HeomSettings,
    NoiseSpec,
    compare,
    emulate,
    fidelity,
    noise_average,
    run_simulator,
    run_target,
    sweep,
)
from .hamiltonians import CouplingKind, DqdParameters, TwoLevelSystem
from .heom import HeomProblem, Trace, propagate
from .mapping import MappingSpec, control_fields, scale_report
from .qbs import QbsDesign, RlcUnit, fit_qbs

__version__ = "0.1.0"

__all__ = [
    "Ablation",
    "BathCorrelation",
    "CouplingKind",
    "DqdParameters",
    "DrudeLorentz",
    "EmulationConfig",
    "HeomProblem",
    "HeomSettings",
    "MappingSpec",
    "NoiseSpec",
    "QbsDesign",
    "RlcUnit",
    "Trace",
    "TwoLevelSystem",
    "bath",
    "compare",
    "config",
    "control_fields",
    "emulate",
    "experiments",
    "fidelity",
    "fit_qbs",
    "hamiltonians",
    "heom",
    "mapping",
    "noise_average",
    "pade_decompose",
    "propagate",
    "qbs",
    "run_simulator",
    "run_target",
    "scale_report",
    "split_spectral_density",
    "sweep",
    "units",
]
