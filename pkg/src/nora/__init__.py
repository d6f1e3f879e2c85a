"""Analytic fluid model and Monte Carlo simulator for non-orthogonal random access (NORA)."""
from .analytic import SlotTrace, run_fluid_model
from .config import ScenarioConfig, build_config, parse_config
from .core import Scheme, expected_preamble_successes, separability_probabilities
from .metrics import MetricsReport, compute_report
from .runner import run, sweep
from .simulate import run_replications, run_simulation

__all__ = [
    "ScenarioConfig", "parse_config", "build_config", "Scheme", "SlotTrace", "run_fluid_model",
    "run_simulation", "run_replications", "MetricsReport", "compute_report", "run", "sweep",
    "expected_preamble_successes", "separability_probabilities",
]
__version__ = "0.1.0"
