"""Shot-noise-referenced calibration of heterodyne detection efficiency."""
from .analysis import (
    EfficiencyEstimate,
    EnbwResult,
    calibrated_power,
    compute_enbw,
    estimate_efficiency,
    extract_spectral_ratio,
    spectral_ratio,
)
from .config import CliConfig, load_config
from .dataset import Dataset, load_dataset, persist_dataset
from .esa import EsaConfig, MonitorModel, Trace, expected_spectrum, sample_trace, synthesize_tone_cal_trace
from .estimator import EnbwEstimator, HeterodyneEfficiencyEstimator
from .exceptions import (
    AnalysisError,
    ConfigError,
    HetcalError,
    InsufficientSNRError,
    SchemaError,
    UnphysicalEfficiencyError,
)
from .protocol import Scenario, SweepSpec, run_protocol, run_sweep, validate_scenario
from .receiver import (
    ChannelParams,
    FieldParams,
    ReceiverParams,
    beat_power_rms,
    lumped_efficiency,
    shot_noise_variance_density,
)
from .uncertainty import UncertainValue, compare_estimates, loss_chain_estimate, propagate_uncertainty

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "ChannelParams",
    "CliConfig",
    "ConfigError",
    "Dataset",
    "EfficiencyEstimate",
    "EnbwEstimator",
    "EnbwResult",
    "EsaConfig",
    "FieldParams",
    "HetcalError",
    "HeterodyneEfficiencyEstimator",
    "InsufficientSNRError",
    "MonitorModel",
    "ReceiverParams",
    "Scenario",
    "SchemaError",
    "SweepSpec",
    "Trace",
    "UncertainValue",
    "UnphysicalEfficiencyError",
    "beat_power_rms",
    "calibrated_power",
    "compare_estimates",
    "compute_enbw",
    "estimate_efficiency",
    "expected_spectrum",
    "extract_spectral_ratio",
    "load_config",
    "load_dataset",
    "loss_chain_estimate",
    "lumped_efficiency",
    "persist_dataset",
    "propagate_uncertainty",
    "run_protocol",
    "run_sweep",
    "sample_trace",
    "shot_noise_variance_density",
    "spectral_ratio",
    "synthesize_tone_cal_trace",
    "validate_scenario",
]
