"""occusim: building thermal simulation under occupancy-forecast errors."""

from .analyser import AcceptanceBox, AnalysisReport, analyse
from .config import Control, SimulationConfig, format_config, load_config, parse_config, validate
from .engine import SimulationResult, SimulationRun, simulate
from .errorlab import build_error_matrix, inject_error, select_erroneous, select_reference
from .errors import ConfigError, OccusimError, SimulationError
from .experiment import emit_scatter, run_error_sweep

__version__ = "0.1.0"

__all__ = [
    "AcceptanceBox", "AnalysisReport", "analyse",
    "Control", "SimulationConfig", "format_config", "load_config", "parse_config", "validate",
    "SimulationResult", "SimulationRun", "simulate",
    "build_error_matrix", "inject_error", "select_erroneous", "select_reference",
    "ConfigError", "OccusimError", "SimulationError",
    "emit_scatter", "run_error_sweep",
]
