"""Hybrid quantum-classical multi-output time-series forecasting.

Subpackages cover the exact simulator core (:mod:`qforecast.sim`), the MPS
backend for wide shallow circuit (:mod:`qforecast.mps`), the repeated-
measurement quantum reservoir (:mod:`qforecast.kqrc`), the projected-kernel
Gaussian process (:mod:`qforecast.qgp`), kernel-geometry diagnostics
(:mod:`qforecast.diagnostics`), classical baselines
(:mod:`qforecast.baselines`), data handling (:mod:`qforecast.data`), and the
experiment harness (:mod:`qforecast.bench`).
"""

from .sim import Circuit, Gate, PauliString, QuantumState
from .mps import MpsState
from .kqrc import ReservoirConfig
from .qgp import FeatureMapParams
from .data import GeneratorParams, TimeSeriesDataset, generate_synthetic
from .bench import ExperimentConfig, run_experiment, emit_report

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "Gate",
    "PauliString",
    "QuantumState",
    "MpsState",
    "ReservoirConfig",
    "FeatureMapParams",
    "GeneratorParams",
    "TimeSeriesDataset",
    "generate_synthetic",
    "ExperimentConfig",
    "run_experiment",
    "emit_report",
    "__version__",
]
