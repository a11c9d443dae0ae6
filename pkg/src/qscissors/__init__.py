"""Numerical simulator of a zero/one-photon travelling-wave teleporter built
from two quantum-scissors stages, with exact CPTP models of lossy beam
splitters and inefficient photon counters, plus a closed-form oracle layer."""

from .analytic import (
    NoiseParams,
    OracleReport,
    combined_damping,
    teleport_fidelity,
    teleport_norm,
    truncation_fidelity,
    truncation_norm,
    wick_moment,
)
from .apparatus import (
    BellBranch,
    QubitAmplitudes,
    RunResult,
    ScissorsConfig,
    TeleportConfig,
    bell_click_assignment,
    bell_decompose,
    bell_states,
    bs_action_on_bell,
    full_pipeline,
    ideal_channel,
    run_scissors,
    run_teleport,
)
from .channels import (
    BeamSplitterSpec,
    DetectorSpec,
    ImpossibleOutcomeError,
    KrausChannel,
    apply_bs_channel,
    attenuation_kraus,
    detector_povm,
    dilate,
    ideal_bs_unitary,
    lossy_bs_kraus,
    postselect,
    two_mode_unitary_matrix,
)
from .fock import (
    CoherentDrive,
    DensityOperator,
    FockVector,
    ModeRegister,
    basis_ket,
    coherent_amplitudes,
    fidelity,
    pad_cutoffs,
    partial_trace,
    tensor,
)

__version__ = "0.1.0"

__all__ = [
    "BeamSplitterSpec",
    "BellBranch",
    "CoherentDrive",
    "DensityOperator",
    "DetectorSpec",
    "FockVector",
    "ImpossibleOutcomeError",
    "KrausChannel",
    "ModeRegister",
    "NoiseParams",
    "OracleReport",
    "QubitAmplitudes",
    "RunResult",
    "ScissorsConfig",
    "TeleportConfig",
    "apply_bs_channel",
    "attenuation_kraus",
    "basis_ket",
    "bell_click_assignment",
    "bell_decompose",
    "bell_states",
    "bs_action_on_bell",
    "coherent_amplitudes",
    "combined_damping",
    "detector_povm",
    "dilate",
    "fidelity",
    "full_pipeline",
    "ideal_bs_unitary",
    "ideal_channel",
    "lossy_bs_kraus",
    "pad_cutoffs",
    "partial_trace",
    "postselect",
    "run_scissors",
    "run_teleport",
    "teleport_fidelity",
    "teleport_norm",
    "tensor",
    "truncation_fidelity",
    "truncation_norm",
    "two_mode_unitary_matrix",
    "wick_moment",
]
