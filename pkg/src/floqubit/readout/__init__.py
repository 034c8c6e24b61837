"""Open-system readout of the Floquet qubit: Lindblad solver, pointer states, Kerr circuit."""
from .circuit import (
    KerrCircuit,
    LabelingError,
    NormalModeData,
    build_circuit_model,
    fit_longitudinal,
    floquet_d_inf,
    normal_mode_reduce,
    predicted_d_inf,
    simulate_circuit_readout,
)
from .lindblad import LindbladError, LindbladModel, lindblad_evolve
from .pointer import (
    PointerTrajectory,
    TwoBodyReadoutConfig,
    dispersive_D_analytic,
    longitudinal_D_analytic,
    pointer_separation,
    simulate_two_body_readout,
    snr,
    snr_longitudinal_exact,
)

__all__ = [
    "KerrCircuit", "LabelingError", "NormalModeData", "build_circuit_model", "fit_longitudinal", "floquet_d_inf",
    "normal_mode_reduce", "predicted_d_inf", "simulate_circuit_readout",
    "LindbladError", "LindbladModel", "lindblad_evolve",
    "PointerTrajectory", "TwoBodyReadoutConfig", "dispersive_D_analytic", "longitudinal_D_analytic",
    "pointer_separation", "simulate_two_body_readout", "snr", "snr_longitudinal_exact",
]
