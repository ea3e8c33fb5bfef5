"""Molecular-communication channel models for laminar duct flow.

Closed-form channel impulse responses for the dispersion and flow-dominated
transport regimes in a cylindrical duct, a particle-based Monte Carlo engine
that validates them against the full advection-diffusion dynamics, and an
on-off-keying link layer with optimal threshold detection.
"""

from .duct import (
    DuctChannelConfig,
    ReceiverVolume,
    Regime,
    RegimeVerdict,
    ReleaseKind,
    ReleaseSpec,
    classify_regime,
    mean_velocity_from_pressure,
    peclet_number,
    point_in_receiver,
    rx_area_fraction,
    velocity_at,
)
from .impulse import (
    CirModel,
    DispersionModel,
    FlowModel,
    ImpulseResponse,
    cir_dispersion,
    cir_flow_point,
    cir_flow_uniform,
    dispersion_peak_time,
    dispersion_peak_value,
    effective_diffusion,
    flow_point_window,
    flow_transit_times,
    sample_cir_dispersion,
    sample_cir_flow_point,
    sample_cir_flow_uniform,
)
from .oracles import oracle_cir_dispersion, oracle_cir_flow
from .ook import (
    OokLinkConfig,
    SerMethod,
    SerResult,
    detect,
    mean_signal,
    optimal_threshold,
    ser_analytic,
    ser_monte_carlo,
    symbol_error_prob_poisson,
)
from .particles import (
    ObservationSeries,
    ParticleEnsemble,
    SimConfig,
    SimResult,
    initial_positions,
    observation_patterns,
    run,
    snapshot,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "DuctChannelConfig", "ReceiverVolume", "ReleaseKind", "ReleaseSpec",
    "Regime", "RegimeVerdict", "velocity_at", "mean_velocity_from_pressure",
    "peclet_number", "classify_regime", "rx_area_fraction", "point_in_receiver",
    "CirModel", "ImpulseResponse", "DispersionModel", "FlowModel",
    "effective_diffusion", "cir_dispersion", "dispersion_peak_time",
    "dispersion_peak_value", "flow_transit_times", "cir_flow_uniform",
    "cir_flow_point", "flow_point_window", "sample_cir_dispersion",
    "sample_cir_flow_uniform", "sample_cir_flow_point",
    "oracle_cir_dispersion", "oracle_cir_flow",
    "SimConfig", "ParticleEnsemble", "ObservationSeries", "SimResult",
    "initial_positions", "step", "run", "snapshot", "observation_patterns",
    "OokLinkConfig", "SerMethod", "SerResult", "mean_signal", "detect",
    "symbol_error_prob_poisson", "ser_analytic", "optimal_threshold",
    "ser_monte_carlo",
    "__version__",
]
