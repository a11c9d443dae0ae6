"""End-to-end pipelines: Bell-basis algebra, the quantum-scissors state
engineering stage, and the zero/one-photon teleporter, with post-selection
probabilities and fidelities against the ideal target.

Mode naming follows the optical layout: the teleporter prepares its entangled
channel from a single photon on modes (a, b), mixes Alice's input mode c with
b, and detects (b, c); the scissors stage prepares that input by mixing a
single photon on (c, d) and a coherent drive on e, detecting (d, e).
Environment modes of lossy elements are traced out immediately inside the
channel application, so the largest live register stays at three modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import (
    BeamSplitterSpec,
    DetectorSpec,
    apply_bs_channel,
    ideal_bs_unitary,
    postselect,
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
    tensor,
)

BELL_LABELS = ("psi_plus", "psi_minus", "phi_plus", "phi_minus")


@dataclass(frozen=True)
class QubitAmplitudes:
    """Normalized zero/one-photon superposition amplitudes."""

    c0: complex
    c1: complex

    def __post_init__(self):
        object.__setattr__(self, "c0", complex(self.c0))
        object.__setattr__(self, "c1", complex(self.c1))
        nsq = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(nsq - 1.0) > 1e-12:
            raise ValueError(f"|c0|^2 + |c1|^2 = {nsq} is not 1")

    def as_vector(self, label: str = "c", cutoff: int = 1) -> FockVector:
        reg = ModeRegister((label,), (cutoff,))
        amps = np.zeros(reg.dim, dtype=complex)
        amps[0] = self.c0
        amps[1] = self.c1
        return FockVector(reg, amps)

    def phase_flipped(self) -> "QubitAmplitudes":
        return QubitAmplitudes(self.c0, -self.c1)


@dataclass(frozen=True)
class ScissorsConfig:
    """State-engineering stage: single photon and coherent drive, detect (d, e)."""

    drive: CoherentDrive = field(default_factory=lambda: CoherentDrive(1.0))
    bs1: BeamSplitterSpec = field(default_factory=BeamSplitterSpec.ideal_5050)
    bs2: BeamSplitterSpec = field(default_factory=BeamSplitterSpec.ideal_5050)
    detectors: DetectorSpec = field(default_factory=lambda: DetectorSpec(1.0))
    clicks: tuple[int, int] = (1, 0)
    output_cutoff: int = 1


@dataclass(frozen=True)
class TeleportConfig:
    """Teleportation stage: entangled channel from a single photon, detect (b, c)."""

    input_state: DensityOperator | QubitAmplitudes | None = None
    bs1: BeamSplitterSpec = field(default_factory=BeamSplitterSpec.ideal_5050)
    bs2: BeamSplitterSpec = field(default_factory=BeamSplitterSpec.ideal_5050)
    detectors: DetectorSpec = field(default_factory=lambda: DetectorSpec(1.0))
    clicks: tuple[int, int] = (1, 0)
    target: FockVector | None = None


@dataclass(frozen=True)
class RunResult:
    """Conditional output of one post-selected pipeline run."""

    state: DensityOperator
    probability: float
    fidelity: float
    target: FockVector
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")


def bell_states(register: ModeRegister | None = None) -> dict[str, FockVector]:
    """The four maximally entangled zero/one-photon states on modes (b, c):
    psi_pm = (|01> pm i|10>)/sqrt(2), phi_pm = (|00> pm i|11>)/sqrt(2)."""
    reg = register if register is not None else ModeRegister(("b", "c"), (1, 1))
    if reg.n_modes != 2:
        raise ValueError("Bell states need a two-mode register")
    s = 1 / math.sqrt(2)

    def vec(pairs):
        amps = np.zeros(reg.dim, dtype=complex)
        for occ, a in pairs:
            amps[reg.index(occ)] = a
        return FockVector(reg, amps)

    return {
        "psi_plus": vec([((0, 1), s), ((1, 0), 1j * s)]),
        "psi_minus": vec([((0, 1), s), ((1, 0), -1j * s)]),
        "phi_plus": vec([((0, 0), s), ((1, 1), 1j * s)]),
        "phi_minus": vec([((0, 0), s), ((1, 1), -1j * s)]),
    }


@dataclass(frozen=True)
class BellBranch:
    """One Bell component of the joint input-times-channel state.

    ``conditional`` is the exact (sub-normalized) relative state of mode a,
    so summing bell_state (x) conditional over all four branches rebuilds the
    joint state including phases; ``weight`` is its squared norm.
    """

    label: str
    conditional: FockVector
    weight: float


def ideal_channel(labels: tuple[str, str] = ("a", "b")) -> FockVector:
    """The entangled resource a 50/50 splitter makes from one photon:
    (|10> + i|01>)/sqrt(2)."""
    reg = ModeRegister(labels, (1, 1))
    s = 1 / math.sqrt(2)
    amps = np.zeros(reg.dim, dtype=complex)
    amps[reg.index((1, 0))] = s
    amps[reg.index((0, 1))] = 1j * s
    return FockVector(reg, amps)


def bell_decompose(qubit: QubitAmplitudes) -> list[BellBranch]:
    """Expand (input qubit on c) x (ideal channel on a, b) over the Bell basis
    of modes (b, c).

    Each branch carries weight 1/4.  Which Bell label carries the unmodified
    qubit is resolved numerically from the fixed conventions above (it is the
    psi_plus branch), not assumed.
    """
    joint = tensor(ideal_channel(("a", "b")), qubit.as_vector("c"))
    reg = joint.register
    a_reg = ModeRegister(("a",), (1,))
    bells = bell_states()
    branches = []
    for label in BELL_LABELS:
        bell = bells[label]
        cond = np.zeros(2, dtype=complex)
        for na in range(2):
            amp = 0j
            for occ_bc, b_amp in zip(bell.register.occupations(), bell.amplitudes):
                if b_amp == 0:
                    continue
                amp += np.conj(b_amp) * joint.amplitudes[reg.index((na, occ_bc[0], occ_bc[1]))]
            cond[na] = amp
        vec = FockVector(a_reg, cond)
        branches.append(BellBranch(label, vec, vec.norm_sq()))
    return branches


def reconstruct_joint(branches: list[BellBranch]) -> FockVector:
    """Rebuild the joint (a, b, c) state from its Bell branches."""
    bells = bell_states()
    total = None
    for branch in branches:
        piece = tensor(branch.conditional, bells[branch.label])
        total = piece.amplitudes if total is None else total + piece.amplitudes
    return FockVector(ModeRegister(("a", "b", "c"), (1, 1, 1)), total)


def bs_action_on_bell(spec: BeamSplitterSpec) -> dict[str, FockVector]:
    """Images of the four Bell states under the balanced lossless splitter,
    on a cutoff-2 register so the two-photon components are retained."""
    if not spec.is_lossless:
        raise ValueError("Bell-state mapping is defined for the lossless element")
    if abs(abs(spec.t) - abs(spec.r)) > 1e-12:
        raise ValueError("Bell-state mapping needs a balanced (|t| = |r|) element")
    reg = ModeRegister(("b", "c"), (2, 2))
    u = ideal_bs_unitary(spec, reg, ("b", "c"))
    out = {}
    for label, state in bell_states().items():
        padded = pad_cutoffs(state, {"b": 2, "c": 2})
        out[label] = FockVector(reg, u @ padded.amplitudes)
    return out


def bell_click_assignment(spec: BeamSplitterSpec | None = None) -> dict[str, tuple[int, int] | None]:
    """Which detector click pattern on (b, c) each Bell state is mapped to,
    resolved numerically; None for states spread over several patterns."""
    spec = spec if spec is not None else BeamSplitterSpec.ideal_5050()
    images = bs_action_on_bell(spec)
    assignment = {}
    for label, img in images.items():
        nz = [
            (int(occ[0]), int(occ[1]))
            for occ, amp in zip(img.register.occupations(), img.amplitudes)
            if abs(amp) > 1e-12
        ]
        assignment[label] = nz[0] if len(nz) == 1 else None
    return assignment


def run_scissors(config: ScissorsConfig) -> RunResult:
    """Engineer the zero/one-photon state: single photon into the first
    splitter, coherent drive against its d output on the second, then
    post-select the click pattern on (d, e).

    Mode cutoffs are sized so every element acts exactly on the retained
    photon-number blocks: with drive cutoff N, modes d and e get N + 1.
    """
    drive_vec = coherent_amplitudes(config.drive, label="e")
    n_drive = drive_vec.register.cutoffs[0]
    budget = n_drive + 1
    tail = max(0.0, 1.0 - drive_vec.norm_sq())

    reg_cd = ModeRegister(("c", "d"), (config.output_cutoff, 1))
    rho = basis_ket(reg_cd, (1, 0)).to_density()
    rho = apply_bs_channel(rho, ("c", "d"), config.bs1)
    trace_defect = abs(rho.trace() - 1.0)

    rho = pad_cutoffs(rho, {"d": budget})
    drive_rho = pad_cutoffs(drive_vec, {"e": budget}).to_density()
    rho = tensor(rho, drive_rho)
    expected_trace = 1.0 - tail
    rho = apply_bs_channel(rho, ("d", "e"), config.bs2)
    trace_defect = max(trace_defect, abs(rho.trace() - expected_trace))

    state, probability = postselect(
        rho,
        [
            ("d", config.detectors, config.clicks[0]),
            ("e", config.detectors, config.clicks[1]),
        ],
    )
    target = _drive_target(config.drive, "c", config.output_cutoff)
    fid = fidelity(state, target)
    return RunResult(
        state=state,
        probability=probability,
        fidelity=fid,
        target=target,
        diagnostics={
            "truncation_error": tail,
            "trace_defect": trace_defect,
            "drive_cutoff": n_drive,
        },
    )


def run_teleport(config: TeleportConfig) -> RunResult:
    """Teleport the mode-c input onto mode a: entangle (a, b) from a single
    photon, mix c with b, post-select the click pattern on (b, c)."""
    rho_c, default_target = _teleport_input(config)

    reg_ab = ModeRegister(("a", "b"), (1, 1))
    rho_ab = basis_ket(reg_ab, (1, 0)).to_density()
    rho_ab = apply_bs_channel(rho_ab, ("a", "b"), config.bs1)
    trace_defect = abs(rho_ab.trace() - 1.0)

    rho_ab = pad_cutoffs(rho_ab, {"b": 2})
    rho_c = pad_cutoffs(rho_c, {"c": 2})
    rho = tensor(rho_ab, rho_c)
    expected_trace = rho.trace()
    rho = apply_bs_channel(rho, ("b", "c"), config.bs2)
    trace_defect = max(trace_defect, abs(rho.trace() - expected_trace))

    state, probability = postselect(
        rho,
        [
            ("b", config.detectors, config.clicks[0]),
            ("c", config.detectors, config.clicks[1]),
        ],
    )
    target = config.target if config.target is not None else default_target
    if target is None:
        raise ValueError("a target is required when the input is a density operator")
    fid = fidelity(state, target)
    return RunResult(
        state=state,
        probability=probability,
        fidelity=fid,
        target=target,
        diagnostics={"trace_defect": trace_defect},
    )


def full_pipeline(
    scissors: ScissorsConfig, teleport: TeleportConfig | None = None
) -> tuple[RunResult, RunResult, float]:
    """Run state engineering, feed its conditional output into the teleporter,
    and report the end-to-end fidelity of mode a against the ideal target."""
    if teleport is None:
        teleport = TeleportConfig(
            bs1=scissors.bs1, bs2=scissors.bs2, detectors=scissors.detectors
        )
    scissors_result = run_scissors(scissors)
    teleport_cfg = replace(
        teleport,
        input_state=scissors_result.state,
        target=_drive_target(scissors.drive, "a", 1),
    )
    teleport_result = run_teleport(teleport_cfg)
    return scissors_result, teleport_result, teleport_result.fidelity


def _drive_target(drive: CoherentDrive, label: str, cutoff: int) -> FockVector:
    norm = math.sqrt(drive.qubit_norm_sq)
    reg = ModeRegister((label,), (cutoff,))
    amps = np.zeros(reg.dim, dtype=complex)
    amps[0] = drive.amp0 / norm
    amps[1] = drive.amp1 / norm
    return FockVector(reg, amps)


def _teleport_input(config: TeleportConfig) -> tuple[DensityOperator, FockVector | None]:
    state = config.input_state
    if state is None:
        raise ValueError("TeleportConfig.input_state is not set")
    if isinstance(state, QubitAmplitudes):
        target = QubitAmplitudes(state.c0, state.c1).as_vector("a", cutoff=1)
        return state.as_vector("c").to_density(), target
    if isinstance(state, DensityOperator):
        if state.register.n_modes != 1:
            raise ValueError("teleport input must be a single-mode state")
        if state.register.labels != ("c",):
            state = DensityOperator(
                ModeRegister(("c",), state.register.cutoffs), state.matrix, check=False
            )
        return state, None
    raise TypeError(f"unsupported input state type {type(state).__name__}")
