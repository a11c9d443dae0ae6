"""Optical elements as quantum operations on truncated Fock registers.

Three models live here:

* exact passive two-mode unitaries, built block-by-block in total photon
  number so that every block with total photons within both mode cutoffs is
  exactly unitary (truncation can never corrupt a retained block);
* lossy beam splitters as CPTP channels, realized as a unitary dilation onto
  two vacuum environment modes that is traced out immediately.  The dilation
  reproduces the element's noise covariance N = I - S S^dag when the
  environment is in vacuum, which fixes the channel completely (any unitary
  completion gives the same channel);
* inefficient click detectors as diagonal binomial POVMs with post-selection.

Applied channels keep density operators dense and lift sparse operators onto
the register, so registers of a few thousand basis states stay cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import (
    DensityOperator,
    FockVector,
    ModeRegister,
    partial_trace,
)

PSD_TOL = 1e-12
LOSSLESS_TOL = 1e-14
IMPOSSIBLE_PROBABILITY = 1e-300


class ImpossibleOutcomeError(RuntimeError):
    """Raised when a post-selection pattern has (numerically) zero probability."""

    def __init__(self, probability: float):
        super().__init__(f"post-selection outcome has probability {probability}")
        self.probability = probability


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Beam splitter with complex transmission t and reflection r.

    Scattering matrix S = [[t, r], [r, t]].  The damping constant
    Gamma = 1 - |t|^2 - |r|^2 and cross term Omega = t r* + r t* must give a
    positive semidefinite noise covariance N = [[Gamma, -Omega], [-Omega, Gamma]]
    (Gamma >= |Omega|), otherwise the element is unphysical and rejected.
    """

    t: complex
    r: complex

    def __post_init__(self):
        object.__setattr__(self, "t", complex(self.t))
        object.__setattr__(self, "r", complex(self.r))
        if self.gamma < -PSD_TOL:
            raise ValueError(f"|t|^2 + |r|^2 = {1 - self.gamma} exceeds 1: spec is unphysical")
        if self.gamma < abs(self.omega) - PSD_TOL:
            raise ValueError(
                f"noise covariance not positive semidefinite: Gamma={self.gamma:.6g} < "
                f"|Omega|={abs(self.omega):.6g}"
            )

    @classmethod
    def ideal_5050(cls) -> "BeamSplitterSpec":
        """Symmetric lossless 50/50: t = 1/sqrt(2), r = i/sqrt(2)."""
        return cls(1 / math.sqrt(2), 1j / math.sqrt(2))

    @classmethod
    def lossy_5050(cls, gamma: float) -> "BeamSplitterSpec":
        """Balanced lossy element: |t| = |r| with 2|t|^2 = 1 - Gamma, r = i|t|."""
        if not 0 <= gamma < 1:
            raise ValueError(f"damping must lie in [0, 1), got {gamma}")
        mag = math.sqrt((1 - gamma) / 2)
        return cls(mag, 1j * mag)

    @property
    def gamma(self) -> float:
        """Damping constant 1 - |t|^2 - |r|^2."""
        return 1.0 - abs(self.t) ** 2 - abs(self.r) ** 2

    @property
    def omega(self) -> float:
        """Cross noise term t r* + r t* (real by construction)."""
        return float(2 * (self.t * self.r.conjugate()).real)

    @property
    def scattering_matrix(self) -> np.ndarray:
        return np.array([[self.t, self.r], [self.r, self.t]])

    @property
    def noise_covariance(self) -> np.ndarray:
        s = self.scattering_matrix
        return np.eye(2) - s @ s.conj().T

    @property
    def is_lossless(self) -> bool:
        return self.gamma <= LOSSLESS_TOL


@dataclass(frozen=True)
class DetectorSpec:
    """Single-photon counter with detection efficiency eta."""

    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")


@dataclass
class KrausChannel:
    """Explicit Kraus representation of a lossy two-mode element.

    Operators act on the two-mode basis with per-mode cutoff ``cutoff``
    (basis order: (n1, n2), second mode fastest).  ``outcomes[i]`` is the
    environment photon pair counted by ``operators[i]``.
    """

    operators: list
    outcomes: list
    cutoff: int
    spec: BeamSplitterSpec

    def completeness_defect(self, block_max: int | None = None) -> float:
        """Max deviation of sum K^dag K from identity on blocks with total
        photons <= block_max (defaults to the per-mode cutoff, the largest
        total for which no output component can be truncated away)."""
        if block_max is None:
            block_max = self.cutoff
        dim = self.cutoff + 1
        total = np.zeros((dim * dim, dim * dim), dtype=complex)
        for k in self.operators:
            total += k.conj().T @ k
        n1, n2 = np.divmod(np.arange(dim * dim), dim)
        retained = (n1 + n2) <= block_max
        delta = total - np.eye(dim * dim)
        return float(np.max(np.abs(delta[np.ix_(retained, retained)])))

    def apply(self, rho: DensityOperator, modes: tuple[str, str]) -> DensityOperator:
        """Apply the channel to two modes of a register state."""
        reg = rho.register
        for label in modes:
            if reg.cutoffs[reg.position(label)] != self.cutoff:
                raise ValueError(
                    f"mode {label!r} has cutoff {reg.cutoffs[reg.position(label)]}, "
                    f"channel was built for cutoff {self.cutoff}"
                )
        out = np.zeros_like(rho.matrix)
        for k in self.operators:
            lifted = lift_pair_operator(sp.csr_matrix(k), reg, modes)
            out += _sandwich(lifted, rho.matrix)
        return DensityOperator(reg, _hermitize(out), check=False)


def two_mode_unitary_matrix(matrix_2x2: np.ndarray, cutoff1: int, cutoff2: int) -> np.ndarray:
    """Fock representation of a passive transformation with 2x2 matrix V.

    Heisenberg convention: output operators are V times input operators, so a
    creation operator on input mode i maps to sum_j V[j, i] a_j^dag.  The
    result conserves total photon number and is exactly unitary on every block
    with total photons <= min(cutoff1, cutoff2) when V is unitary.
    """
    return _blockwise_passive(matrix_2x2, cutoff1, cutoff2).toarray()


def _blockwise_passive(v: np.ndarray, cutoff1: int, cutoff2: int) -> sp.csr_matrix:
    d1, d2 = cutoff1 + 1, cutoff2 + 1
    v00, v10 = complex(v[0, 0]), complex(v[1, 0])
    v01, v11 = complex(v[0, 1]), complex(v[1, 1])
    rows, cols, vals = [], [], []
    for ntot in range(cutoff1 + cutoff2 + 1):
        ms = [m for m in range(ntot + 1) if m <= cutoff1 and ntot - m <= cutoff2]
        for m in ms:  # input (m, ntot-m)
            n2 = ntot - m
            col = m * d2 + n2
            lg_in = math.lgamma(m + 1) + math.lgamma(n2 + 1)
            for p in ms:  # output (p, ntot-p)
                q = ntot - p
                amp = 0j
                for k in range(max(0, p - n2), min(m, p) + 1):
                    term = math.comb(m, k) * math.comb(n2, p - k)
                    amp += (
                        term
                        * v00**k
                        * v10 ** (m - k)
                        * v01 ** (p - k)
                        * v11 ** (n2 - (p - k))
                    )
                if amp == 0:
                    continue
                lg_out = math.lgamma(p + 1) + math.lgamma(q + 1)
                amp *= math.exp(0.5 * (lg_out - lg_in))
                rows.append(p * d2 + q)
                cols.append(col)
                vals.append(amp)
    return sp.csr_matrix(
        (np.array(vals, dtype=complex), (rows, cols)), shape=(d1 * d2, d1 * d2)
    )


def ideal_bs_unitary(spec: BeamSplitterSpec, register: ModeRegister, modes: tuple[str, str]) -> np.ndarray:
    """Full-register unitary of a lossless beam splitter on two modes."""
    if not spec.is_lossless:
        raise ValueError(f"spec has Gamma={spec.gamma:.3e} > 0; only lossless elements have a unitary")
    c1 = register.cutoffs[register.position(modes[0])]
    c2 = register.cutoffs[register.position(modes[1])]
    op = _blockwise_passive(spec.scattering_matrix, c1, c2)
    return lift_pair_operator(op, register, modes).toarray()


def dilate(spec: BeamSplitterSpec) -> np.ndarray:
    """4x4 unitary scattering matrix for system modes (1, 2) plus two vacuum
    environment modes (3, 4).

    Upper-left block is S; the environment coupling block B satisfies
    B B^dag = I - S S^dag, which is all the channel depends on.  A lossless
    spec decouples the environment exactly.
    """
    s = spec.scattering_matrix
    n = spec.noise_covariance
    if np.max(np.abs(n)) <= PSD_TOL:
        return np.block([[s, np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2)]])
    b = _psd_sqrt(n)
    c = _psd_sqrt(np.eye(2) - s.conj().T @ s)
    v = np.block([[s, b], [c, -s.conj().T]])
    defect = np.max(np.abs(v @ v.conj().T - np.eye(4)))
    if defect > 1e-10:
        raise ValueError(f"dilation completion failed, unitarity defect {defect:.3e}")
    return v


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    if vals[0] < -PSD_TOL:
        raise ValueError(f"matrix not positive semidefinite (min eigenvalue {vals[0]:.3e})")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def lossy_bs_kraus(spec: BeamSplitterSpec, cutoff: int) -> KrausChannel:
    """Kraus operators of the lossy element on a two-mode space with the given
    per-mode cutoff.

    K_(j,k) collects the amplitude for the vacuum environment to end with
    (j, k) photons.  Completeness holds to float precision on all blocks with
    total photons <= cutoff; higher blocks lose the truncated components.
    """
    if spec.is_lossless:
        op = two_mode_unitary_matrix(spec.scattering_matrix, cutoff, cutoff)
        return KrausChannel([op], [(0, 0)], cutoff, spec)
    v = dilate(spec)
    dim = cutoff + 1
    budget = 2 * cutoff
    images = {}
    for m in range(dim):
        for n in range(dim):
            images[(m, n)] = _four_mode_image(v, m, n, budget)
    ops = []
    outcomes = []
    for j in range(budget + 1):
        for k in range(budget + 1 - j):
            kmat = np.zeros((dim * dim, dim * dim), dtype=complex)
            for (m, n), arr in images.items():
                kmat[:, m * dim + n] = arr[:dim, :dim, j, k].reshape(-1)
            if np.any(kmat):
                ops.append(kmat)
                outcomes.append((j, k))
    return KrausChannel(ops, outcomes, cutoff, spec)


def _four_mode_image(v: np.ndarray, m: int, n: int, budget: int) -> np.ndarray:
    """Amplitudes of U(V) |m, n, 0, 0> over the four-mode basis, as an array
    indexed (p, q, j, k) up to total photons m + n."""
    dim = budget + 1
    arr = np.zeros((dim, dim, dim, dim), dtype=complex)
    arr[0, 0, 0, 0] = 1.0
    sqrtn = np.sqrt(np.arange(1, dim))
    for col, count in ((1, n), (0, m)):
        for _ in range(count):
            new = np.zeros_like(arr)
            for i in range(4):
                coeff = v[i, col]
                if coeff == 0:
                    continue
                src = [slice(None)] * 4
                dst = [slice(None)] * 4
                src[i] = slice(0, dim - 1)
                dst[i] = slice(1, dim)
                shape = [1] * 4
                shape[i] = dim - 1
                new[tuple(dst)] += coeff * sqrtn.reshape(shape) * arr[tuple(src)]
            arr = new
    arr /= math.sqrt(math.factorial(m) * math.factorial(n))
    return arr


def detector_povm(det: DetectorSpec, clicks: int, cutoff: int) -> np.ndarray:
    """Diagonal of the POVM element for registering ``clicks`` counts.

    E_n = sum_(m>=n) C(m, n) eta^n (1-eta)^(m-n) |m><m|.  The all-photons-seen
    entry (n = m) is stored as the float remainder of the rest of its binomial
    family, so summing the family over click numbers in ascending order
    resolves the identity exactly, float rounding included.
    """
    if not 0 <= clicks <= cutoff:
        raise ValueError(f"clicks must lie in [0, {cutoff}], got {clicks}")
    eta = det.eta
    diag = np.zeros(cutoff + 1)
    for m in range(cutoff + 1):
        if clicks > m:
            continue
        if clicks == m:
            partial = 0.0
            for k in range(m):
                partial += math.comb(m, k) * eta**k * (1 - eta) ** (m - k)
            diag[m] = 1.0 - partial
        else:
            diag[m] = math.comb(m, clicks) * eta**clicks * (1 - eta) ** (m - clicks)
    return diag


def postselect(rho: DensityOperator, events) -> tuple[DensityOperator, float]:
    """Condition on detector outcomes and drop the measured modes.

    ``events`` is a sequence of (mode label, DetectorSpec, clicks).  Returns
    the normalized conditional state on the unmeasured modes and the outcome
    probability.  A (numerically) impossible outcome raises
    ImpossibleOutcomeError instead of producing a NaN state.
    """
    reg = rho.register
    seen = set()
    weights = {}
    for label, det, clicks in events:
        if label in seen:
            raise ValueError(f"duplicate post-selection on mode {label!r}")
        seen.add(label)
        weights[label] = detector_povm(det, clicks, reg.cutoffs[reg.position(label)])
    occ = reg.occupations()
    w_full = np.ones(reg.dim)
    for label, w in weights.items():
        w_full *= w[occ[:, reg.position(label)]]
    probability = float(np.real(np.sum(w_full * np.diag(rho.matrix))))
    if probability < IMPOSSIBLE_PROBABILITY:
        raise ImpossibleOutcomeError(probability)
    sqrt_w = np.sqrt(w_full)
    weighted = rho.matrix * np.outer(sqrt_w, sqrt_w)
    keep = [l for l in reg.labels if l not in seen]
    reduced = partial_trace(DensityOperator(reg, weighted, check=False), keep)
    return reduced.normalized(), min(probability, 1.0)


def apply_bs_channel(rho: DensityOperator, modes: tuple[str, str], spec: BeamSplitterSpec) -> DensityOperator:
    """Send two modes of a register state through a (possibly lossy) beam
    splitter, tracing the environment immediately.

    Lossless specs apply the exact block unitary.  Lossy specs use the
    singular value decomposition S = W diag(s) X^dag, i.e. a passive unitary,
    independent single-mode attenuators of transmissivity s_i^2, and a second
    passive unitary.  With a vacuum environment this is the same CPTP channel
    as the explicit dilation Kraus set (the channel only depends on S), at a
    fraction of the cost.
    """
    reg = rho.register
    if spec.is_lossless:
        u = _lifted_passive(spec.scattering_matrix, reg, modes)
        return DensityOperator(reg, _hermitize(_sandwich(u, rho.matrix)), check=False)
    w, svals, xh = np.linalg.svd(spec.scattering_matrix)
    u_in = _lifted_passive(xh, reg, modes)
    u_out = _lifted_passive(w, reg, modes)
    mat = _sandwich(u_in, rho.matrix)
    for label, s in zip(modes, svals):
        mat = _apply_mode_attenuation(mat, reg, label, min(float(s) ** 2, 1.0))
    mat = _sandwich(u_out, mat)
    return DensityOperator(reg, _hermitize(mat), check=False)


def attenuation_kraus(tau: float, cutoff: int) -> list:
    """Single-mode loss channel of transmissivity tau as Kraus matrices
    A_k |n> = sqrt(C(n,k) tau^(n-k) (1-tau)^k) |n-k>."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {tau}")
    dim = cutoff + 1
    ops = []
    for k in range(dim):
        a = np.zeros((dim, dim))
        for n in range(k, dim):
            a[n - k, n] = math.sqrt(math.comb(n, k) * tau ** (n - k) * (1 - tau) ** k)
        if np.any(a):
            ops.append(a)
    return ops


def _apply_mode_attenuation(mat: np.ndarray, reg: ModeRegister, label: str, tau: float) -> np.ndarray:
    if tau >= 1.0:
        return mat
    pos = reg.position(label)
    dims = reg.dims
    n = reg.n_modes
    d = dims[pos]
    t = mat.reshape(dims + dims)
    out = np.zeros_like(t)
    ns = np.arange(d)
    for k in range(d):
        w = np.zeros(d)
        w[k:] = np.sqrt(
            [math.comb(int(nn), k) * tau ** (int(nn) - k) * (1 - tau) ** k for nn in ns[k:]]
        )
        src = [slice(None)] * (2 * n)
        dst = [slice(None)] * (2 * n)
        src[pos] = slice(k, d)
        dst[pos] = slice(0, d - k)
        src[n + pos] = slice(k, d)
        dst[n + pos] = slice(0, d - k)
        row_shape = [1] * (2 * n)
        row_shape[pos] = d - k
        col_shape = [1] * (2 * n)
        col_shape[n + pos] = d - k
        wk = w[k:]
        out[tuple(dst)] += wk.reshape(row_shape) * wk.reshape(col_shape) * t[tuple(src)]
    return out.reshape(mat.shape)


def lift_pair_operator(op, register: ModeRegister, modes: tuple[str, str]) -> sp.csr_matrix:
    """Embed an operator on two modes (basis (n_a, n_b), second fastest) into
    the full register as a sparse matrix."""
    coo = sp.coo_matrix(op)
    ia, ib = register.position(modes[0]), register.position(modes[1])
    strides = register.strides
    db = register.dims[ib]
    if coo.shape[0] != register.dims[ia] * db:
        raise ValueError("operator size does not match the selected modes")
    rest = [i for i in range(register.n_modes) if i not in (ia, ib)]
    if rest:
        rest_dims = [register.dims[i] for i in rest]
        combos = np.indices(rest_dims).reshape(len(rest), -1).T
        base = combos @ np.array([strides[i] for i in rest])
    else:
        base = np.array([0])
    pa, qa = np.divmod(coo.row, db)
    pm, qm = np.divmod(coo.col, db)
    row_core = pa * strides[ia] + qa * strides[ib]
    col_core = pm * strides[ia] + qm * strides[ib]
    rows = (row_core[:, None] + base[None, :]).reshape(-1)
    cols = (col_core[:, None] + base[None, :]).reshape(-1)
    vals = np.repeat(coo.data, base.size)
    full = sp.coo_matrix((vals, (rows, cols)), shape=(register.dim, register.dim))
    return full.tocsr()


def _lifted_passive(v: np.ndarray, reg: ModeRegister, modes: tuple[str, str]) -> sp.csr_matrix:
    c1 = reg.cutoffs[reg.position(modes[0])]
    c2 = reg.cutoffs[reg.position(modes[1])]
    return lift_pair_operator(_blockwise_passive(v, c1, c2), reg, modes)


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return (mat + mat.conj().T) / 2


def _sandwich(op, hermitian_mat: np.ndarray) -> np.ndarray:
    """op @ m @ op^dag for Hermitian m, using only (sparse) op @ dense products."""
    tmp = np.asarray(op @ hermitian_mat)
    return np.asarray(op @ tmp.conj().T).conj().T
